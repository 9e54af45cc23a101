#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "opgen.hpp"
#include "test_util.hpp"

using namespace opseq;

namespace {

AlignedSentencePair swap_pair() {
  AlignedSentencePair p;
  p.source = {"a", "b"};
  p.target = {"B", "A"};
  p.links = {{0, 1}, {1, 0}};
  return p;
}

std::vector<Token> collapsed_source_order(const AlignedSentencePair& pair) {
  // Source words in the order the interpreter reproduces them: every
  // discontinuous cept collapses to its first-position slot.
  auto ex = extract_mtus(pair);
  struct Slot {
    int pos;
    std::vector<Token> toks;
  };
  std::vector<Slot> slots;
  for (const auto& m : ex.mtus)
    if (!m.src_pos.empty()) slots.push_back({m.src_start(), m.src_toks});
  for (int u : ex.unaligned_source) slots.push_back({u, {pair.source[u]}});
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    return a.pos < b.pos;
  });
  std::vector<Token> out;
  for (const auto& s : slots)
    for (const auto& t : s.toks) out.push_back(t);
  return out;
}

void check_round_trip(const AlignedSentencePair& pair) {
  auto ops = generate_operations(pair);
  auto [src, tgt] = interpret_operations(ops);
  CHECK(tgt == pair.target);
  CHECK(src == collapsed_source_order(pair));
}

}  // namespace

TEST_CASE("reference sentence produces the expected operations") {
  auto pair = testutil::golden_pair();
  auto ops = generate_operations(pair);
  CHECK(ops_to_line(ops) == testutil::golden_ops_line());
  auto [src, tgt] = interpret_operations(ops);
  CHECK(tgt == pair.target);
  CHECK(src == pair.source);
}

TEST_CASE("reference sentence coarse mapping") {
  auto ops = generate_operations(testutil::golden_pair());
  auto coarse = to_coarse(ops);
  std::vector<std::string> tags;
  for (const auto& op : coarse)
    if (op.is_reordering()) tags.push_back(op_to_string(op));
  CHECK(tags == std::vector<std::string>{"FD", "BD", "BD", "BD"});
  CHECK(ops_to_line(coarse) ==
        "GEN_T(it) FD GEN(wäre|would_be) GEN(ebenso|just_as) "
        "GEN(unverantwortlich|irresponsible) BD GEN(zu|to) GEN(wollen|wish) "
        "GEN_S(,) BD GEN(gehen|to_go) BD GEN(noch_weiter|further)");
  // With swap detection on, the last jump is an adjacent swap: "gehen" is
  // generated first and "noch weiter" sits immediately to its left.
  CHECK(ops_to_line(to_coarse(ops, true)) ==
        "GEN_T(it) FD GEN(wäre|would_be) GEN(ebenso|just_as) "
        "GEN(unverantwortlich|irresponsible) BD GEN(zu|to) GEN(wollen|wish) "
        "GEN_S(,) BD GEN(gehen|to_go) SW GEN(noch_weiter|further)");
}

TEST_CASE("adjacent swap") {
  auto ops = generate_operations(swap_pair());
  CHECK(ops_to_line(ops) == "GAP GEN(b|B) JB_1 GEN(a|A)");
  CHECK(ops_to_line(to_coarse(ops)) == "FD GEN(b|B) BD GEN(a|A)");
  CHECK(ops_to_line(to_coarse(ops, true)) == "FD GEN(b|B) SW GEN(a|A)");
  check_round_trip(swap_pair());
}

TEST_CASE("monotone sentence needs no reordering operations") {
  AlignedSentencePair p;
  p.source = {"a", "b", "c"};
  p.target = {"A", "B", "C"};
  p.links = {{0, 0}, {1, 1}, {2, 2}};
  auto ops = generate_operations(p);
  CHECK(ops_to_line(ops) == "GEN(a|A) GEN(b|B) GEN(c|C)");
  check_round_trip(p);
}

TEST_CASE("unaligned words on both sides") {
  AlignedSentencePair p;
  p.source = {"u", "a", "v"};
  p.target = {"x", "A", "y"};
  p.links = {{1, 1}};
  auto ops = generate_operations(p);
  // A leading unaligned source word is skipped via a gap and emitted when
  // the leftover gaps are closed at the end of the sentence.
  CHECK(ops_to_line(ops) == "GEN_T(x) GAP GEN(a|A) GEN_S(v) GEN_T(y) JB_1 GEN_S(u)");
  check_round_trip(p);
}

TEST_CASE("generate-self for identical aligned tokens") {
  AlignedSentencePair p;
  p.source = {"42"};
  p.target = {"42"};
  p.links = {{0, 0}};
  auto ops = generate_operations(p);
  CHECK(ops_to_line(ops) == "GEN_SELF(42)");
  check_round_trip(p);
}

TEST_CASE("empty and one-sided sentences") {
  AlignedSentencePair empty;
  CHECK(generate_operations(empty).empty());

  AlignedSentencePair only_src;
  only_src.source = {"a", "b"};
  CHECK(ops_to_line(generate_operations(only_src)) == "GEN_S(a) GEN_S(b)");

  AlignedSentencePair only_tgt;
  only_tgt.target = {"A", "B"};
  CHECK(ops_to_line(generate_operations(only_tgt)) == "GEN_T(A) GEN_T(B)");
}

TEST_CASE("mtu extraction") {
  auto ex = extract_mtus(testutil::golden_pair());
  REQUIRE(ex.mtus.size() == 7);
  // Ordered by smallest target position.
  CHECK(ex.mtus[0].tgt_toks == std::vector<Token>{"would", "be"});
  CHECK(ex.mtus[0].src_toks == std::vector<Token>{"wäre"});
  CHECK(ex.mtus[1].tgt_toks == std::vector<Token>{"just", "as"});
  CHECK(ex.mtus[2].tgt_toks == std::vector<Token>{"irresponsible"});
  CHECK(ex.mtus[3].tgt_toks == std::vector<Token>{"to"});
  CHECK(ex.mtus[3].src_toks == std::vector<Token>{"zu"});
  CHECK(ex.mtus[4].tgt_toks == std::vector<Token>{"wish"});
  CHECK(ex.mtus[4].src_toks == std::vector<Token>{"wollen"});
  CHECK(ex.mtus[5].tgt_toks == std::vector<Token>{"to", "go"});
  CHECK(ex.mtus[5].src_toks == std::vector<Token>{"gehen"});
  CHECK(ex.mtus[6].tgt_toks == std::vector<Token>{"further"});
  CHECK(ex.mtus[6].src_toks == std::vector<Token>{"noch", "weiter"});
  CHECK(ex.unaligned_source == std::vector<int>{5});
  CHECK(ex.unaligned_target == std::vector<int>{0});

  // Many-to-many components collapse into a single unit.
  AlignedSentencePair p;
  p.source = {"a", "b"};
  p.target = {"X", "Y"};
  p.links = {{0, 0}, {0, 1}, {1, 0}};
  auto ex2 = extract_mtus(p);
  REQUIRE(ex2.mtus.size() == 1);
  CHECK(ex2.mtus[0].src_toks == std::vector<Token>{"a", "b"});
  CHECK(ex2.mtus[0].tgt_toks == std::vector<Token>{"X", "Y"});
}

TEST_CASE("orientation classification") {
  auto unit = [](std::vector<int> src) {
    Mtu m;
    m.src_pos = std::move(src);
    m.tgt_pos = {0};
    return m;
  };
  CHECK(classify_orientation(unit({0, 1}), unit({2})) == Orientation::M);
  CHECK(classify_orientation(unit({2}), unit({0, 1})) == Orientation::S);
  CHECK(classify_orientation(unit({0}), unit({3})) == Orientation::FD);
  CHECK(classify_orientation(unit({3}), unit({0})) == Orientation::BD);
  CHECK(orientation_name(Orientation::M) == "M");
  CHECK(orientation_name(Orientation::S) == "S");
  CHECK(orientation_name(Orientation::FD) == "FD");
  CHECK(orientation_name(Orientation::BD) == "BD");
  CHECK_THROWS_AS(classify_orientation(Mtu{}, unit({0})), DataError);
}

TEST_CASE("lexical projection keeps generation order") {
  auto ops = generate_operations(testutil::golden_pair());
  auto lex = to_lexical(ops);
  CHECK(ops_to_line(lex) ==
        "GEN_T(it) GEN(wäre|would_be) GEN(ebenso|just_as) "
        "GEN(unverantwortlich|irresponsible) GEN(zu|to) GEN(wollen|wish) GEN_S(,) "
        "GEN(gehen|to_go) GEN(noch_weiter|further)");
  for (const auto& op : lex) CHECK(op.is_lexical());
}

TEST_CASE("operation text round trip") {
  auto ops = generate_operations(testutil::golden_pair());
  auto again = parse_ops_line(ops_to_line(ops));
  CHECK(ops_to_line(again) == ops_to_line(ops));
  REQUIRE(again.size() == ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    CHECK(again[i].kind == ops[i].kind);
    CHECK(again[i].src == ops[i].src);
    CHECK(again[i].tgt == ops[i].tgt);
    CHECK(again[i].jump == ops[i].jump);
  }
  CHECK(parse_op("JB_3").jump == 3);
  CHECK(parse_op("FD").kind == OpKind::CoarseFD);
  CHECK_THROWS_AS(parse_op("GEN(a"), ParseError);
  CHECK_THROWS_AS(parse_op("JB_0"), ParseError);
  CHECK_THROWS_AS(parse_op("NOPE"), ParseError);
}

TEST_CASE("interpreter rejects corrupt sequences") {
  OperationSequence bad;
  Operation jb{OpKind::JumpBack, {}, {}, 1, false};
  bad.push_back(jb);  // jump with no open gap
  CHECK_THROWS_AS(interpret_operations(bad), DataError);

  OperationSequence coarse = to_coarse(generate_operations(swap_pair()));
  CHECK_THROWS_AS(interpret_operations(coarse), DataError);
}

TEST_CASE("random sentences round trip") {
  std::mt19937_64 rng(20240817);
  for (int it = 0; it < 300; ++it) {
    auto pair = testutil::random_pair(rng);
    CAPTURE(it);
    CAPTURE(join_tokens(pair.source));
    CAPTURE(join_tokens(pair.target));
    check_round_trip(pair);
    // Text serialization must survive a full cycle too.
    auto ops = generate_operations(pair);
    CHECK(ops_to_line(parse_ops_line(ops_to_line(ops))) == ops_to_line(ops));
  }
}
