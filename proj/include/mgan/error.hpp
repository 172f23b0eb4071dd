#pragma once

#include <stdexcept>
#include <string>

namespace mgan {

// Malformed input data or a violated operation contract. The CLI maps this
// to exit status 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mgan
