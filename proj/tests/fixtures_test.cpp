#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mtp/fixtures/corpus.hpp"
#include "mtp/fixtures/mocks.hpp"

using namespace mtp::fixtures;

TEST_CASE("table parsing and errors") {
    const auto m = MockModel::parse_table("# head1 head2\n1 2\n\n0 1\n", 3);
    CHECK(m.k_max() == 2);
    const std::vector<std::int32_t> tokens{0, 0, 0};
    CHECK(m.predict(tokens, 0, 1) == 1);
    CHECK(m.predict(tokens, 1, 2) == 1);
    CHECK(m.predict(tokens, 2, 1) == 1);  // wraps to the first row

    CHECK_THROWS_AS(MockModel::parse_table("", 3), FixtureError);
    CHECK_THROWS_AS(MockModel::parse_table("1 2\n1\n", 3), FixtureError);
    CHECK_THROWS_AS(MockModel::parse_table("1 x\n", 3), FixtureError);
    CHECK_THROWS_AS(MockModel::parse_table("1 3\n", 3), FixtureError);
    CHECK_THROWS_AS(MockModel::parse_table("1 -1\n", 3), FixtureError);
    CHECK_THROWS_AS(MockModel::parse_table("1 2\n", 1), FixtureError);
    try {
        MockModel::parse_table("0 1\n0 1.5\n", 3);
        FAIL("expected an error");
    } catch (const FixtureError &e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("make_mock reads table files and checks head counts") {
    const auto path = std::filesystem::temp_directory_path() / "mtp_mock_table.txt";
    std::ofstream(path) << "0 1 0\n1 0 1\n";
    auto m = make_mock(MockKind::kTableDriven, 3, 2, path.string());
    CHECK(m->k_max() == 3);
    CHECK_THROWS_AS(make_mock(MockKind::kTableDriven, 2, 2, path.string()), FixtureError);
    CHECK_THROWS_AS(make_mock(MockKind::kTableDriven, 3, 2, (path.string() + ".missing")), FixtureError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(make_mock(MockKind::kAllAccept, 2, 1), FixtureError);
    CHECK(make_mock(MockKind::kNeverAccept, 4, 7)->vocab_size() == 7);
    CHECK(parse_mock_kind("never-accept") == MockKind::kNeverAccept);
    CHECK_THROWS_AS(parse_mock_kind("sometimes"), FixtureError);
}

TEST_CASE("rule mocks: drafts agree or disagree with the later head-1 choice") {
    const auto all = MockModel::rule(MockKind::kAllAccept, 4, 9);
    const auto never = MockModel::rule(MockKind::kNeverAccept, 4, 9);
    std::vector<std::int32_t> seq{2, 5};
    for (int i = 0; i < 6; ++i) seq.push_back(all.predict(seq, static_cast<std::int32_t>(seq.size()) - 1, 1));
    for (int j = 2; j <= 4; ++j) {
        CHECK(all.predict(seq, 1, j) == seq[static_cast<std::size_t>(1 + j)]);
        CHECK(never.predict(seq, 1, j) != seq[static_cast<std::size_t>(1 + j)]);
    }
    const auto logits = all.logits(seq, std::vector<std::int32_t>{0, 3}, 2);
    CHECK(logits.size() == 2 * 2 * 9);
    CHECK_THROWS_AS(all.logits(seq, std::vector<std::int32_t>{8}, 1), FixtureError);
    CHECK_THROWS_AS(all.logits(seq, std::vector<std::int32_t>{0}, 5), FixtureError);
}

TEST_CASE("uniform and peeking models") {
    const UniformModel u(320, 256);
    const std::vector<std::int32_t> tokens{1, 2, 3};
    const auto l = u.logits(tokens, std::vector<std::int32_t>{0, 2}, 1);
    CHECK(l.size() == 640);
    CHECK(l[255] == 0.0f);
    CHECK(l[256] == -1e30f);
    CHECK(l[320 + 319] == -1e30f);
    CHECK_THROWS_AS(UniformModel(10, 11), FixtureError);

    const PeekingModel p(5, 2);
    const auto q = p.logits(tokens, std::vector<std::int32_t>{0, 2}, 2);
    CHECK(q[2] == 0.0f);           // position 0, head 1 -> token 2
    CHECK(q[1] == -1e30f);
    CHECK(q[5 + 3] == 0.0f);       // position 0, head 2 -> token 3
    CHECK(q[10 + 4] == 0.0f);      // position 2 has no successor: flat
    CHECK(q[10 + 1] == 0.0f);
}

TEST_CASE("toy corpus is deterministic and sized") {
    const auto a = toy_corpus(3, 20000);
    const auto b = toy_corpus(3, 20000);
    const auto c = toy_corpus(4, 20000);
    CHECK(a == b);
    CHECK(a != c);
    std::size_t total = 0;
    for (const auto &d : a) {
        total += d.size();
        CHECK(d.back() == '\n');
        for (unsigned char ch : d) CHECK(ch < 128);
    }
    CHECK(total >= 20000);
    CHECK(total < 20000 + 2000);
}
