#include "prodsearch/text.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "oracles.h"

namespace prodsearch {
namespace {

TEST(NormalizeWords, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(normalize_words("Sony WH-1000XM3, Review!"),
            (std::vector<std::string>{"sony", "wh", "1000xm3", "review"}));
  EXPECT_TRUE(normalize_words("  --  ").empty());
}

TEST(NormalizeWords, KeepsMultibyteSequencesInsideWords) {
  EXPECT_EQ(normalize_words("caf\xc3\xa9 menu"),
            (std::vector<std::string>{"caf\xc3\xa9", "menu"}));
}

TEST(Vocab, UnknownPieceIsAlwaysFirst) {
  Vocab v({"a", "##b", "a"});
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.piece(0), kUnknownPiece);
  EXPECT_EQ(v.id("##b"), 2);
  EXPECT_EQ(v.id("zz"), -1);
  EXPECT_THROW(Vocab({""}), std::invalid_argument);
}

TEST(Vocab, SaveLoadRoundTrip) {
  oracle::TempDir dir("vocab");
  Vocab v({"lap", "##top", "l", "a", "p"});
  v.save(dir.str("v.txt"));
  EXPECT_EQ(Vocab::load(dir.str("v.txt")).pieces(), v.pieces());
}

TEST(Tokenize, GreedyLongestMatch) {
  Vocab v({"u", "n", "a", "f", "##n", "##a", "##f", "un", "##aff", "##able", "##ab", "##le"});
  EXPECT_EQ(tokenize("unaffable", v),
            (std::vector<std::string>{"un", "##aff", "##able"}));
}

TEST(Tokenize, UnsegmentableWordBecomesSingleUnknown) {
  Vocab v({"a", "##b"});
  EXPECT_EQ(tokenize("abc ab", v), (std::vector<std::string>{"[UNK]", "a", "##b"}));
}

TEST(Tokenize, EmptyTextHasNoPieces) {
  EXPECT_TRUE(tokenize("", Vocab()).empty());
}

// Property: over random vocabularies and words, segmentation equals an
// independent greedy oracle and concatenating pieces restores the word.
TEST(TokenizeProperty, RoundTripAndGreedyPrefixOnRandomCases) {
  std::mt19937_64 rng(20190901);
  const std::string alphabet = "abcdef";
  int unknown_cases = 0;
  for (int c = 0; c < 1000; ++c) {
    std::set<std::string> pieces;
    std::uniform_int_distribution<int> letter(0, static_cast<int>(alphabet.size()) - 1);
    std::uniform_int_distribution<int> len(2, 5);
    // Most cases include every single character so every word segments.
    const bool complete = c % 5 != 0;
    for (char ch : alphabet) {
      if (complete || letter(rng) % 2) {
        pieces.insert(std::string(1, ch));
        pieces.insert("##" + std::string(1, ch));
      }
    }
    for (int k = 0; k < 12; ++k) {
      std::string p;
      for (int i = len(rng); i > 0; --i) p += alphabet[letter(rng)];
      pieces.insert(k % 2 ? "##" + p : p);
    }
    std::string word;
    for (int i = std::uniform_int_distribution<int>(1, 14)(rng); i > 0; --i) {
      word += alphabet[letter(rng)];
    }
    const Vocab vocab(std::vector<std::string>(pieces.begin(), pieces.end()));
    const auto got = tokenize_word(word, vocab);
    const auto want = oracle::greedy_segment(word, pieces);
    if (want.empty()) {
      ++unknown_cases;
      ASSERT_EQ(got, std::vector<std::string>{"[UNK]"}) << word;
      continue;
    }
    ASSERT_EQ(got, want) << word;
    ASSERT_EQ(oracle::join_pieces(got), word);
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_EQ(got[i].rfind("##", 0) == 0, i > 0);
    }
  }
  EXPECT_GT(unknown_cases, 0);
}

TEST(LearnVocab, HoldsCharactersAndMergesFrequentPairs) {
  const std::vector<std::string> corpus = {"laptop laptop laptop", "lap top", "tablet"};
  const Vocab v = learn_vocab(corpus, 40);
  EXPECT_EQ(v.piece(0), kUnknownPiece);
  for (const char* ch : {"l", "a", "p", "t", "o", "b", "e"}) EXPECT_TRUE(v.contains(ch)) << ch;
  EXPECT_TRUE(v.contains("laptop"));
  EXPECT_LE(v.size(), 40u);
  for (const auto& w : normalize_words("laptop lap top tablet")) {
    EXPECT_EQ(oracle::join_pieces(tokenize_word(w, v)), w);
  }
}

TEST(LearnVocab, IsAPureFunctionOfTheCorpus) {
  const std::vector<std::string> corpus = {"red shoes", "blue shoes", "shoe rack", "red rack"};
  EXPECT_EQ(learn_vocab(corpus, 30, 1).pieces(), learn_vocab(corpus, 30, 99).pieces());
}

TEST(LearnVocab, StopsWhenNoPairRemains) {
  const std::vector<std::string> corpus = {"ab"};
  const Vocab v = learn_vocab(corpus, 1000);
  EXPECT_LT(v.size(), 1000u);
  EXPECT_TRUE(v.contains("ab"));
}

TEST(Url, ExtractsDomain) {
  EXPECT_EQ(extract_domain("https://www.Amazon.com:443/dp/B01?ref=x"), "amazon.com");
  EXPECT_EQ(extract_domain("http://shop.example.co.uk"), "shop.example.co.uk");
  EXPECT_EQ(extract_domain("not a url"), "");
  EXPECT_EQ(extract_domain(""), "");
}

TEST(Url, TextOptionallyIncludesHost) {
  const std::string u = "https://www.sonix.com/laptops/pro-15?x=1#top";
  EXPECT_EQ(split_url(u).path, "/laptops/pro-15");
  EXPECT_EQ(normalize_words(url_text(u, false)),
            (std::vector<std::string>{"laptops", "pro", "15"}));
  EXPECT_EQ(normalize_words(url_text(u, true)),
            (std::vector<std::string>{"sonix", "com", "laptops", "pro", "15"}));
}

TEST(EmbeddingTable, RejectsWrongDimensionAndNonFinite) {
  EmbeddingTable t(2);
  const std::vector<double> ok = {1, 2}, bad = {1}, nan = {1, std::nan("")};
  t.set("a", ok);
  EXPECT_THROW(t.set("b", bad), std::invalid_argument);
  EXPECT_THROW(t.set("c", nan), std::invalid_argument);
  EXPECT_EQ(t.find("a").size(), 2u);
  EXPECT_TRUE(t.find("zz").empty());
}

TEST(EmbeddingTable, SaveLoadRoundTripAndEmptyFile) {
  oracle::TempDir dir("emb");
  EmbeddingTable t(3);
  const std::vector<double> v = {0.25, -1.5, 3.0};
  t.set("lap", v);
  t.save(dir.str("e.txt"));
  const auto back = load_embeddings(dir.str("e.txt"), 7);
  ASSERT_EQ(back.dim(), 3u);
  EXPECT_EQ(std::vector<double>(back.find("lap").begin(), back.find("lap").end()), v);

  std::ofstream(dir.str("empty.txt")).flush();
  const auto empty = load_embeddings(dir.str("empty.txt"), 7);
  EXPECT_TRUE(empty.empty());
  EXPECT_EQ(empty.dim(), 7u);
}

TEST(EmbeddingTable, InconsistentRowNamesLine) {
  oracle::TempDir dir("emb_bad");
  std::ofstream(dir.str("e.txt")) << "a 1 2\nb 1\n";
  try {
    load_embeddings(dir.str("e.txt"), 2);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos) << e.what();
  }
}

TEST(EmbedText, MeanOfKnownPiecesOrZero) {
  EmbeddingTable t(2);
  const std::vector<double> a = {1, 3}, b = {3, 5};
  t.set("a", a);
  t.set("b", b);
  const std::vector<std::string> pieces = {"a", "b", "zz"};
  EXPECT_EQ(embed_text(pieces, t), (std::vector<double>{2, 4}));
  const std::vector<std::string> none = {"zz"};
  EXPECT_EQ(embed_text(none, t), (std::vector<double>{0, 0}));
}

TEST(TrainEmbeddings, DeterministicAndLossDecreases) {
  std::vector<std::vector<std::string>> corpus;
  std::mt19937_64 rng(3);
  const std::vector<std::string> a = {"laptop", "charger", "battery", "screen"};
  const std::vector<std::string> b = {"soup", "recipe", "chicken", "pasta"};
  for (int i = 0; i < 200; ++i) {
    const auto& pool = i % 2 ? a : b;
    std::vector<std::string> doc;
    for (int k = 0; k < 6; ++k) doc.push_back(pool[rng() % pool.size()]);
    corpus.push_back(doc);
  }
  EmbeddingParams p;
  p.dim = 8;
  p.epochs = 4;
  const auto first = train_embeddings(corpus, p);
  const auto second = train_embeddings(corpus, p);
  ASSERT_EQ(first.table.pieces(), second.table.pieces());
  for (const auto& piece : first.table.pieces()) {
    const auto x = first.table.find(piece), y = second.table.find(piece);
    ASSERT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
  }
  ASSERT_EQ(first.epoch_loss.size(), 4u);
  EXPECT_LT(first.epoch_loss.back(), first.epoch_loss.front());
}

}  // namespace
}  // namespace prodsearch
