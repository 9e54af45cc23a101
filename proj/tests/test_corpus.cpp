#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "corpus.hpp"

using namespace opseq;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("opseq_corpus_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    auto p = (path / name).string();
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }
};

}  // namespace

TEST_CASE("token splitting and joining") {
  CHECK(split_tokens("a  b\tc ") == std::vector<Token>{"a", "b", "c"});
  CHECK(split_tokens("") == std::vector<Token>{});
  CHECK(join_tokens({"a", "b"}) == "a b");
  CHECK(join_tokens({"noch", "weiter"}, '_') == "noch_weiter");
  CHECK(join_tokens({}) == "");
}

TEST_CASE("alignment line parsing") {
  CHECK(parse_alignment_line("0-0 1-2") == std::vector<Link>{{0, 0}, {1, 2}});
  CHECK(parse_alignment_line("") == std::vector<Link>{});
  CHECK(parse_alignment_line("3-1 3-2 3-1") == std::vector<Link>{{3, 1}, {3, 2}});
  CHECK(parse_alignment_line("  10-7 ") == std::vector<Link>{{10, 7}});
  CHECK_THROWS_AS(parse_alignment_line("12"), ParseError);
  CHECK_THROWS_AS(parse_alignment_line("a-1"), ParseError);
  CHECK_THROWS_AS(parse_alignment_line("1-"), ParseError);
  CHECK_THROWS_AS(parse_alignment_line("0-0 x"), ParseError);
  try {
    parse_alignment_line("0-0 bad");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.column == 5);  // 1-based byte offset of the bad pair
  }
}

TEST_CASE("corpus load, validation and round trip") {
  TempDir dir;
  auto src = dir.file("c.src", "der hund\n\nx y z\n");
  auto tgt = dir.file("c.tgt", "the dog\n\na b\n");
  auto aln = dir.file("c.aln", "0-0 1-1\n\n0-1 2-0\n");
  auto corpus = load_corpus(src, tgt, aln);
  REQUIRE(corpus.size() == 3);
  CHECK(corpus[0].source == std::vector<Token>{"der", "hund"});
  CHECK(corpus[1].source.empty());
  CHECK(corpus[1].target.empty());
  CHECK(corpus[1].links.empty());
  CHECK(corpus[2].links == std::vector<Link>{{0, 1}, {2, 0}});

  auto s2 = (dir.path / "o.src").string(), t2 = (dir.path / "o.tgt").string(),
       a2 = (dir.path / "o.aln").string();
  save_corpus(corpus, s2, t2, a2);
  auto again = load_corpus(s2, t2, a2);
  REQUIRE(again.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(again[i].source == corpus[i].source);
    CHECK(again[i].target == corpus[i].target);
    CHECK(again[i].links == corpus[i].links);
  }
}

TEST_CASE("corpus errors name the offending sentence") {
  TempDir dir;
  auto src = dir.file("c.src", "a b c\n");
  auto tgt = dir.file("c.tgt", "x\n");
  SUBCASE("line count mismatch") {
    auto aln = dir.file("c.aln", "0-0\n1-0\n");
    CHECK_THROWS_AS(load_corpus(src, tgt, aln), DataError);
  }
  SUBCASE("out-of-range link") {
    auto aln = dir.file("c.aln", "5-0\n");
    try {
      load_corpus(src, tgt, aln);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("sentence 1") != std::string::npos);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_corpus(src, tgt, (dir.path / "nope").string()), DataError);
  }
}

TEST_CASE("vocabulary construction") {
  std::vector<Token> stream{"a", "b", "a", "c", "a", "b"};
  SUBCASE("frequency cut") {
    auto v = build_vocabulary(stream, 1);
    CHECK(v.reserved_count() == 3);
    CHECK(v.size() == 4);
    CHECK(v.contains("a"));
    CHECK(!v.contains("b"));
    CHECK(v.id("b") == v.unk_id());
  }
  SUBCASE("cap zero keeps reserved only") {
    auto v = build_vocabulary(stream, 0);
    CHECK(v.size() == 3);
    CHECK(v.id("a") == v.unk_id());
  }
  SUBCASE("lexicographic tie break") {
    auto v = build_vocabulary({"b", "a", "b", "a"}, 1);
    CHECK(v.contains("a"));
    CHECK(!v.contains("b"));
  }
  SUBCASE("reserved symbols never count against the cap") {
    auto v = build_vocabulary(stream, 1, {"Insert_Gap", "Jump_Back_1"});
    CHECK(v.contains("Insert_Gap"));
    CHECK(v.contains("Jump_Back_1"));
    CHECK(v.contains("a"));
    CHECK(v.reserved_count() == 5);
    CHECK(v.is_reserved(v.id("Insert_Gap")));
    CHECK(!v.is_reserved(v.id("a")));
  }
  SUBCASE("sentinels always present and never unknown") {
    auto v = build_vocabulary({}, 0);
    CHECK(v.id(Vocabulary::kStart) != v.unk_id());
    CHECK(v.id(Vocabulary::kEnd) != v.unk_id());
    CHECK(v.id(Vocabulary::kUnk) == v.unk_id());
  }
}

TEST_CASE("vocabulary save and load") {
  TempDir dir;
  auto v = build_vocabulary({"x", "y", "x"}, 5, {"Insert_Gap"});
  auto path = (dir.path / "vocab.tsv").string();
  v.save(path);
  auto w = Vocabulary::load(path);
  CHECK(w.size() == v.size());
  for (int i = 0; i < v.size(); ++i) CHECK(w.token(i) == v.token(i));
  CHECK(w.unk_id() == v.unk_id());
  CHECK(w.reserved_count() == v.reserved_count());
}

TEST_CASE("vocabulary from id-ordered token list") {
  auto v = Vocabulary::from_tokens({"<s>", "</s>", "<unk>", "dog"}, 3);
  CHECK(v.size() == 4);
  CHECK(v.id("dog") == 3);
  CHECK(v.reserved_count() == 3);
  CHECK_THROWS_AS(Vocabulary::from_tokens({"a", "b"}, 0), DataError);
}

TEST_CASE("file digests are stable and content-sensitive") {
  TempDir dir;
  auto a = dir.file("a", "hello");
  auto b = dir.file("b", "hello");
  auto c = dir.file("c", "hellp");
  CHECK(file_digest(a) == file_digest(b));
  CHECK(file_digest(a) != file_digest(c));
}
