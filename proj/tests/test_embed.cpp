#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mgan/embed.hpp"
#include "mgan/error.hpp"

using namespace mgan;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << body;
    return p;
}

KeywordGraph vertices_only(std::vector<std::string> v) {
    KeywordGraph g;
    g.adjacency = Matrix(v.size(), v.size(), 0.0);
    g.vertices = std::move(v);
    return g;
}

}  // namespace

TEST_CASE("load_embeddings") {
    const auto ok = write_temp("mgan_emb_ok.txt", "heart 1 2 3 4\nattack 0.5 -1 0 2e-1\n");
    const auto t = load_embeddings(ok, 4);
    CHECK(t.size() == 2);
    CHECK(t.dim() == 4);
    CHECK(*t.find("heart") == std::vector<double>{1, 2, 3, 4});
    CHECK(*t.find("ATTACK") == std::vector<double>{0.5, -1, 0, 0.2});
    CHECK(t.find("missing") == nullptr);

    const auto bad = write_temp("mgan_emb_bad.txt", "a 1 2 3 4\nb 1 2 3\n");
    CHECK_THROWS_WITH_AS(load_embeddings(bad, 4), doctest::Contains("line 2"), DataError);

    const auto dup = write_temp("mgan_emb_dup.txt", "x 1 1\ny 2 2\nz 3 3\nw 4 4\nx 5 5\n");
    const auto d = load_embeddings(dup, 2);
    CHECK(d.size() == 4);
    CHECK(d.duplicates() == 1);
    CHECK(*d.find("x") == std::vector<double>{5, 5});

    CHECK_THROWS_AS(load_embeddings("/nonexistent/emb.txt", 4), DataError);
    for (const auto& p : {ok, bad, dup}) std::filesystem::remove(p);
}

TEST_CASE("embed_pair layout and OOV feature") {
    EmbeddingTable table(2);
    table.insert("heart", {1, 0});
    table.insert("attack", {0, 1});

    SUBCASE("one OOV query token that is also a vertex") {
        const auto e = embed_pair({"xyzfoo", "heart"}, vertices_only({"xyzfoo", "attack"}), table, 4);
        CHECK(e.oov == 1.0);
        CHECK(e.query.rows == 4);
        CHECK(e.mask == std::vector<bool>{true, true, false, false});
        CHECK(e.query(0, 0) == 0.0);
        CHECK(e.query(0, 1) == 0.0);
        CHECK(e.query(1, 0) == 1.0);
        CHECK(e.vertices.rows == 2);
        CHECK(e.vertices(1, 1) == 1.0);
        CHECK(e.vertices(0, 0) == 0.0);
    }
    SUBCASE("all tokens in vocabulary") {
        CHECK(embed_pair({"heart", "attack"}, vertices_only({"heart"}), table, 4).oov == 0.0);
    }
    SUBCASE("distinct count") {
        CHECK(embed_pair({"xyzfoo", "xyzfoo"}, vertices_only({"xyzfoo"}), table, 4).oov == 1.0);
    }
    SUBCASE("truncation to max_query_len") {
        const auto e = embed_pair({"heart", "attack", "heart"}, vertices_only({"heart"}), table, 2);
        CHECK(e.query.rows == 2);
        CHECK(e.mask == std::vector<bool>{true, true});
    }
}
