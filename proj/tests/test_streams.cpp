#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "streams.hpp"
#include "test_util.hpp"

using namespace opseq;
namespace fs = std::filesystem;

namespace {

StreamPair golden_streams(Variant v = Variant::Osm, bool swap = false) {
  auto ops = generate_operations(testutil::golden_pair());
  if (v == Variant::Coarse) ops = to_coarse(ops, swap);
  if (v == Variant::Lexical) ops = to_lexical(ops);
  return split_streams(ops, v);
}

}  // namespace

TEST_CASE("variant names") {
  CHECK(parse_variant("osm") == Variant::Osm);
  CHECK(parse_variant("coarse") == Variant::Coarse);
  CHECK(parse_variant("lexical") == Variant::Lexical);
  CHECK(variant_name(Variant::Coarse) == "coarse");
  CHECK_THROWS_AS(parse_variant("fine"), UsageError);
}

TEST_CASE("reordering symbols") {
  CHECK(reorder_symbol(Operation{OpKind::InsertGap, {}, {}, 0, false}) == "Insert_Gap");
  CHECK(reorder_symbol(Operation{OpKind::JumpBack, {}, {}, 3, false}) == "Jump_Back_3");
  CHECK(reorder_symbol(Operation{OpKind::JumpForward, {}, {}, 0, false}) == "Jump_Fwd");
  CHECK(is_reorder_symbol("Insert_Gap"));
  CHECK(is_reorder_symbol("Jump_Back_12"));
  CHECK(is_reorder_symbol("FD"));
  CHECK(is_reorder_symbol("SW"));
  CHECK(!is_reorder_symbol("Jump"));
  CHECK(!is_reorder_symbol("gap"));
}

TEST_CASE("reference sentence streams") {
  auto sp = golden_streams();
  CHECK(join_tokens(sp.target) == testutil::golden_target_stream());
  CHECK(join_tokens(sp.source) == testutil::golden_source_stream());
  CHECK(sp.sync == testutil::golden_sync());
}

TEST_CASE("monotone sentence streams") {
  AlignedSentencePair p;
  p.source = {"a", "b"};
  p.target = {"A", "B"};
  p.links = {{0, 0}, {1, 1}};
  auto sp = split_streams(generate_operations(p), Variant::Osm);
  CHECK(sp.source == std::vector<Token>{"a", "b"});
  CHECK(sp.target == std::vector<Token>{"A", "B"});
  CHECK(sp.sync == std::vector<int>{1, 2});
}

TEST_CASE("coarse and lexical variant streams") {
  auto coarse = golden_streams(Variant::Coarse);
  CHECK(join_tokens(coarse.target) ==
        "it FD would_be just_as irresponsible BD to wish BD to_go BD further");
  CHECK(join_tokens(coarse.source) ==
        "FD wäre ebenso unverantwortlich BD zu wollen , BD gehen BD noch_weiter");
  auto sw = golden_streams(Variant::Coarse, true);
  CHECK(sw.target.back() == "further");
  CHECK(sw.target[sw.target.size() - 2] == "SW");

  auto lex = golden_streams(Variant::Lexical);
  CHECK(join_tokens(lex.target) ==
        "it would_be just_as irresponsible to wish to_go further");
  CHECK(join_tokens(lex.source) ==
        "wäre ebenso unverantwortlich zu wollen , gehen noch_weiter");
  for (const auto& t : lex.target) CHECK(!is_reorder_symbol(t));
}

TEST_CASE("both streams carry the same reordering symbols in the same order") {
  std::mt19937_64 rng(77);
  for (int it = 0; it < 50; ++it) {
    auto pair = testutil::random_pair(rng);
    auto sp = split_streams(generate_operations(pair), Variant::Osm);
    std::vector<Token> in_src, in_tgt;
    for (const auto& t : sp.source)
      if (is_reorder_symbol(t)) in_src.push_back(t);
    for (const auto& t : sp.target)
      if (is_reorder_symbol(t)) in_tgt.push_back(t);
    CHECK(in_src == in_tgt);
    CHECK(sp.sync.size() == sp.target.size());
    for (std::size_t j = 0; j < sp.sync.size(); ++j) {
      CHECK(sp.sync[j] >= 0);
      CHECK(sp.sync[j] <= static_cast<int>(sp.source.size()));
      if (j) CHECK(sp.sync[j] >= sp.sync[j - 1]);
    }
  }
}

TEST_CASE("variant mismatches are rejected") {
  auto ops = generate_operations(testutil::golden_pair());
  CHECK_THROWS_AS(split_streams(ops, Variant::Coarse), DataError);   // raw reordering ops
  CHECK_THROWS_AS(split_streams(ops, Variant::Lexical), DataError);  // any reordering op
  CHECK_THROWS_AS(split_streams(to_coarse(ops), Variant::Osm), DataError);
}

TEST_CASE("training instances") {
  StreamPair sp;
  sp.source = {"s1", "s2", "s3"};
  sp.target = {"t1", "t2"};
  sp.sync = {1, 3};
  auto inst = make_instances(sp, 3, 2);
  REQUIRE(inst.size() == 3);  // one per target token plus the end event
  CHECK(inst[0].context == std::vector<Token>{"<s>", "<s>", "<s>", "s1"});
  CHECK(inst[0].label == "t1");
  CHECK(inst[1].context == std::vector<Token>{"<s>", "t1", "s2", "s3"});
  CHECK(inst[1].label == "t2");
  CHECK(inst[2].context == std::vector<Token>{"t1", "t2", "s2", "s3"});
  CHECK(inst[2].label == "</s>");

  auto no_src = make_instances(sp, 2, 0);
  CHECK(no_src[1].context == std::vector<Token>{"t1"});

  auto golden = make_instances(golden_streams(), 5, 5);
  CHECK(golden.size() == 15);
  CHECK(golden.front().label == "it");
  CHECK(golden.back().label == "</s>");
  for (const auto& i : golden) CHECK(i.context.size() == 9);

  CHECK_THROWS_AS(make_instances(sp, 0, 2), UsageError);
  CHECK_THROWS_AS(make_instances(sp, 2, -1), UsageError);
}

TEST_CASE("stream file round trip and validation") {
  fs::path dir = fs::temp_directory_path() / ("opseq_streams_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto src = (dir / "s").string(), tgt = (dir / "t").string(), sync = (dir / "y").string();

  std::vector<StreamPair> corpus;
  corpus.push_back(golden_streams());
  corpus.push_back(StreamPair{});  // empty sentence survives the trip
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i)
    corpus.push_back(split_streams(generate_operations(testutil::random_pair(rng)),
                                   Variant::Osm));
  save_streams(corpus, src, tgt, sync);
  auto again = load_streams(src, tgt, sync);
  REQUIRE(again.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(again[i].source == corpus[i].source);
    CHECK(again[i].target == corpus[i].target);
    CHECK(again[i].sync == corpus[i].sync);
  }

  SUBCASE("sync longer than target") {
    std::ofstream(sync, std::ios::binary) << "0 0\n\n\n\n\n\n\n\n\n\n\n\n";
    CHECK_THROWS_AS(load_streams(src, tgt, sync), DataError);
  }
  SUBCASE("line count mismatch") {
    std::ofstream(sync, std::ios::binary) << "\n";
    CHECK_THROWS_AS(load_streams(src, tgt, sync), DataError);
  }
  fs::remove_all(dir);
}

TEST_CASE("sync value validation") {
  fs::path dir = fs::temp_directory_path() / ("opseq_sync_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto src = (dir / "s").string(), tgt = (dir / "t").string(), sync = (dir / "y").string();
  std::ofstream(src, std::ios::binary) << "a b\n";
  std::ofstream(tgt, std::ios::binary) << "A B\n";
  SUBCASE("decreasing") {
    std::ofstream(sync, std::ios::binary) << "2 1\n";
    CHECK_THROWS_AS(load_streams(src, tgt, sync), DataError);
  }
  SUBCASE("beyond source length") {
    std::ofstream(sync, std::ios::binary) << "1 3\n";
    CHECK_THROWS_AS(load_streams(src, tgt, sync), DataError);
  }
  SUBCASE("valid") {
    std::ofstream(sync, std::ios::binary) << "1 2\n";
    CHECK(load_streams(src, tgt, sync).size() == 1);
  }
  fs::remove_all(dir);
}
