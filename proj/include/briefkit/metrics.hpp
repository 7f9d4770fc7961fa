#pragma once

// text-generation and agreement metrics. every formula here is pinned by
// tests; change the conventions and the oracle suite will notice.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "briefkit/errors.hpp"
#include "briefkit/text.hpp"

namespace briefkit::metrics {

using TokenSeq = std::vector<std::string>;

class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& where)
      : Error("empty input: " + where) {}
};

class EmptyReference : public Error {
 public:
  EmptyReference() : Error("empty reference sequence") {}
};

class ReferenceTooShort : public Error {
 public:
  ReferenceTooShort(std::size_t len, int n)
      : Error("reference has " + std::to_string(len) +
              " tokens, need at least " + std::to_string(n)) {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("aligned lists differ in length: " + std::to_string(a) +
              " vs " + std::to_string(b)) {}
};

class EmptyTally : public Error {
 public:
  EmptyTally() : Error("confusion tally has no observations") {}
};

class DegenerateMarginals : public Error {
 public:
  DegenerateMarginals()
      : Error("chance agreement is 1, kappa undefined") {}
};

// default tokenization: one token per code point after whitespace removal.
inline TokenSeq char_tokens(std::string_view s) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < s.size()) {
    char32_t cp = text::decode_at(s, i);
    if (text::is_space(cp)) continue;
    std::string tok;
    text::append(tok, cp);
    out.push_back(std::move(tok));
  }
  return out;
}

// word-level alternative: split on whitespace runs.
inline TokenSeq word_tokens(std::string_view s) {
  TokenSeq out;
  std::string cur;
  std::size_t i = 0;
  while (i < s.size()) {
    char32_t cp = text::decode_at(s, i);
    if (text::is_space(cp)) {
      if (!cur.empty()) out.push_back(std::exchange(cur, {}));
      continue;
    }
    text::append(cur, cp);
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace detail {

// n-gram multiset as joined keys; '\x1f' cannot appear inside a token
// produced by the tokenizers above.
inline std::map<std::string, long long> ngram_counts(const TokenSeq& toks,
                                                     int n) {
  std::map<std::string, long long> out;
  if (static_cast<int>(toks.size()) < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k) key.push_back('\x1f');
      key += toks[i + k];
    }
    ++out[key];
  }
  return out;
}

}  // namespace detail

struct BleuReport {
  std::array<double, 4> precisions{};   // modified n-gram precisions p1..p4
  std::array<double, 4> weights{0.25, 0.25, 0.25, 0.25};
  double brevity_penalty = 0.0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
  double score = 0.0;  // 0..100
};

// corpus-level BLEU-4, uniform weights, no smoothing. clipped counts are
// summed over all pairs before dividing. any zero precision zeroes the score.
inline BleuReport bleu4(
    const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs) {
  if (pairs.empty()) throw EmptyInput("bleu4 needs at least one pair");
  for (const auto& [cand, ref] : pairs) {
    (void)cand;
    if (ref.empty()) throw EmptyReference();
  }
  BleuReport rep;
  for (int n = 1; n <= 4; ++n) {
    long long clipped = 0, total = 0;
    for (const auto& [cand, ref] : pairs) {
      auto cg = detail::ngram_counts(cand, n);
      auto rg = detail::ngram_counts(ref, n);
      for (const auto& [gram, count] : cg) {
        total += count;
        auto it = rg.find(gram);
        if (it != rg.end()) clipped += std::min(count, it->second);
      }
    }
    rep.precisions[n - 1] =
        total == 0 ? 0.0 : static_cast<double>(clipped) / total;
  }
  for (const auto& [cand, ref] : pairs) {
    rep.candidate_length += cand.size();
    rep.reference_length += ref.size();
  }
  const double c = static_cast<double>(rep.candidate_length);
  const double r = static_cast<double>(rep.reference_length);
  rep.brevity_penalty = c > r ? 1.0 : (c == 0 ? 0.0 : std::exp(1.0 - r / c));
  bool any_zero = false;
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (rep.precisions[n] == 0.0) {
      any_zero = true;
      break;
    }
    log_sum += rep.weights[n] * std::log(rep.precisions[n]);
  }
  rep.score =
      any_zero ? 0.0 : rep.brevity_penalty * std::exp(log_sum) * 100.0;
  return rep;
}

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

namespace detail {

inline RougeScore rouge_from_counts(long long overlap, long long cand_total,
                                    long long ref_total) {
  RougeScore s;
  s.precision =
      cand_total == 0 ? 0.0 : static_cast<double>(overlap) / cand_total;
  s.recall = ref_total == 0 ? 0.0 : static_cast<double>(overlap) / ref_total;
  s.f1 = (s.precision + s.recall) == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace detail

// per-sample ROUGE-N with clipped n-gram overlap.
inline RougeScore rouge_n(const TokenSeq& cand, const TokenSeq& ref, int n) {
  if (static_cast<int>(ref.size()) < n)
    throw ReferenceTooShort(ref.size(), n);
  auto cg = detail::ngram_counts(cand, n);
  auto rg = detail::ngram_counts(ref, n);
  long long overlap = 0, cand_total = 0, ref_total = 0;
  for (const auto& [gram, count] : cg) {
    cand_total += count;
    auto it = rg.find(gram);
    if (it != rg.end()) overlap += std::min(count, it->second);
  }
  for (const auto& [gram, count] : rg) ref_total += count;
  return detail::rouge_from_counts(overlap, cand_total, ref_total);
}

inline std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// ROUGE-L with beta = 1 (plain harmonic mean of LCS precision and recall).
inline RougeScore rouge_l(const TokenSeq& cand, const TokenSeq& ref) {
  if (cand.empty()) throw EmptyInput("rouge_l candidate");
  if (ref.empty()) throw EmptyInput("rouge_l reference");
  const long long lcs = static_cast<long long>(lcs_length(cand, ref));
  return detail::rouge_from_counts(lcs, static_cast<long long>(cand.size()),
                                   static_cast<long long>(ref.size()));
}

struct ConfusionTally {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long tn = 0;
  long long total() const { return tp + fp + fn + tn; }
};

struct ClassificationScores {
  double accuracy = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// accuracy, recall, f1 from a binary confusion tally. with no actual
// positives recall is vacuously 1; with no positives anywhere f1 is 1.
inline ClassificationScores classification_scores(const ConfusionTally& t) {
  if (t.total() == 0) throw EmptyTally();
  ClassificationScores s;
  s.accuracy = static_cast<double>(t.tp + t.tn) / t.total();
  s.recall = (t.tp + t.fn) == 0
                 ? 1.0
                 : static_cast<double>(t.tp) / (t.tp + t.fn);
  s.f1 = (2 * t.tp + t.fp + t.fn) == 0
             ? 1.0
             : 2.0 * t.tp / (2 * t.tp + t.fp + t.fn);
  return s;
}

// strict exact-match rate over aligned pairs, as a percentage.
template <typename T, typename Eq>
double exact_match_rate(const std::vector<T>& preds,
                        const std::vector<T>& golds, Eq&& equal) {
  if (preds.size() != golds.size())
    throw LengthMismatch(preds.size(), golds.size());
  if (preds.empty()) throw EmptyInput("exact_match_rate");
  std::size_t matches = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (equal(preds[i], golds[i])) ++matches;
  }
  return 100.0 * static_cast<double>(matches) / preds.size();
}

// canonical decimal form: width-folded, trimmed, leading/trailing zeros
// dropped. returns false when the input is not a plain decimal.
inline bool normalize_decimal(std::string_view raw, std::string& out) {
  std::string s = text::trim(text::fold_digit_width(raw));
  if (s.empty()) return false;
  std::size_t i = 0;
  bool neg = false;
  if (s[i] == '+' || s[i] == '-') {
    neg = s[i] == '-';
    ++i;
  }
  std::string ints, frac;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ints.push_back(s[i++]);
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') frac.push_back(s[i++]);
  }
  if (i != s.size() || (ints.empty() && frac.empty())) return false;
  while (ints.size() > 1 && ints.front() == '0') ints.erase(ints.begin());
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  if (ints.empty()) ints = "0";
  out = ints;
  if (!frac.empty()) out += "." + frac;
  if (neg && out != "0") out.insert(out.begin(), '-');
  return true;
}

// numeric comparator for exact_match_rate: "2" = 2 = 2.0.
inline bool numbers_match(std::string_view a, std::string_view b) {
  std::string ca, cb;
  if (!normalize_decimal(a, ca) || !normalize_decimal(b, cb)) return false;
  return ca == cb;
}

// string comparator: trim plus digit width folding, then byte equality.
// 山东省 and 山东 stay distinct.
inline bool strings_match(std::string_view a, std::string_view b) {
  return text::trim(text::fold_digit_width(a)) ==
         text::trim(text::fold_digit_width(b));
}

// TF-IDF cosine over aligned (pred, gold) texts. the vocabulary and the
// document frequencies come from the union of both sides of this run.
// idf = ln((1+N)/(1+df)) + 1, tf = raw count. a zero vector scores 0.
template <typename Tokenize>
std::vector<double> tfidf_cosine(const std::vector<std::string>& preds,
                                 const std::vector<std::string>& golds,
                                 Tokenize&& tokenize) {
  if (preds.size() != golds.size())
    throw LengthMismatch(preds.size(), golds.size());
  if (preds.empty()) throw EmptyInput("tfidf_cosine");
  using Counts = std::map<std::string, long long>;
  const std::size_t n_docs = preds.size() * 2;
  std::vector<Counts> pc(preds.size()), gc(golds.size());
  std::map<std::string, long long> df;
  auto count_doc = [&](const std::string& doc, Counts& out) {
    for (auto& tok : tokenize(doc)) ++out[tok];
    for (const auto& [term, cnt] : out) {
      (void)cnt;
      ++df[term];
    }
  };
  for (std::size_t i = 0; i < preds.size(); ++i) count_doc(preds[i], pc[i]);
  for (std::size_t i = 0; i < golds.size(); ++i) count_doc(golds[i], gc[i]);
  std::map<std::string, double> idf;
  for (const auto& [term, freq] : df) {
    idf[term] =
        std::log((1.0 + n_docs) / (1.0 + static_cast<double>(freq))) + 1.0;
  }
  std::vector<double> out(preds.size(), 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (pc[i].empty() || gc[i].empty()) continue;
    if (pc[i] == gc[i]) {
      // identical term counts give parallel vectors; avoid sqrt round-off
      out[i] = 1.0;
      continue;
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [term, cnt] : pc[i]) {
      double w = cnt * idf[term];
      na += w * w;
      auto it = gc[i].find(term);
      if (it != gc[i].end()) dot += w * (it->second * idf[term]);
    }
    for (const auto& [term, cnt] : gc[i]) {
      double w = cnt * idf[term];
      nb += w * w;
    }
    out[i] = dot / (std::sqrt(na) * std::sqrt(nb));
  }
  return out;
}

inline std::vector<double> tfidf_cosine(const std::vector<std::string>& preds,
                                        const std::vector<std::string>& golds) {
  return tfidf_cosine(preds, golds,
                      [](const std::string& s) { return char_tokens(s); });
}

// Jaccard similarity of two sets; both empty counts as full agreement.
inline double jaccard(const std::set<std::string>& a,
                      const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct KappaReport {
  double observed_agreement = 0.0;
  double expected_agreement = 0.0;
  double kappa = 0.0;
};

// Cohen's kappa between two aligned label lists. computed from integer
// counts so hand-checkable fixtures come out exact in doubles.
inline KappaReport cohen_kappa(const std::vector<std::string>& a,
                               const std::vector<std::string>& b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  if (a.empty()) throw EmptyInput("cohen_kappa");
  const long long n = static_cast<long long>(a.size());
  long long agree = 0;
  std::map<std::string, long long> ma, mb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) ++agree;
    ++ma[a[i]];
    ++mb[b[i]];
  }
  long long chance = 0;  // sum of marginal products
  for (const auto& [label, ca] : ma) {
    auto it = mb.find(label);
    if (it != mb.end()) chance += ca * it->second;
  }
  KappaReport rep;
  rep.observed_agreement = static_cast<double>(agree) / n;
  rep.expected_agreement = static_cast<double>(chance) / (n * n);
  if (n * n == chance) throw DegenerateMarginals();
  rep.kappa = static_cast<double>(n * agree - chance) /
              static_cast<double>(n * n - chance);
  return rep;
}

}  // namespace briefkit::metrics
