#pragma once

// raw post ingestion and the text-cleaning pipeline that produces briefing
// records: URL removal, character-class filtering, mention stripping,
// length filtering, and duplicate removal.

#include <cstddef>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "briefkit/csv.hpp"
#include "briefkit/errors.hpp"
#include "briefkit/text.hpp"

namespace briefkit::corpus {

class MissingColumn : public Error {
 public:
  explicit MissingColumn(const std::string& name)
      : Error("missing column: " + name), column(name) {}
  std::string column;
};

class MalformedRow : public Error {
 public:
  MalformedRow(std::size_t line, const std::string& detail)
      : Error("row at line " + std::to_string(line) + ": " + detail),
        line(line) {}
  std::size_t line;
};

struct RawPost {
  std::string post_id;
  std::string account_id;
  std::string posted_at;
  long long reposts = 0;
  long long likes = 0;
  long long comments = 0;
  std::string body_text;
  std::vector<std::string> image_texts;  // OCR text, one entry per image
  bool operator==(const RawPost&) const = default;
};

// logical field -> csv header name. defaults assume identical names.
struct ColumnMap {
  std::map<std::string, std::string> names = {
      {"post_id", "post_id"},       {"account_id", "account_id"},
      {"posted_at", "posted_at"},   {"reposts", "reposts"},
      {"likes", "likes"},           {"comments", "comments"},
      {"body_text", "body_text"},   {"image_texts", "image_texts"},
  };
  const std::string& csv_name(const std::string& logical) const {
    auto it = names.find(logical);
    if (it == names.end()) throw MissingColumn(logical);
    return it->second;
  }
};

struct RowIssue {
  std::size_t line = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<RawPost> posts;
  std::vector<RowIssue> issues;
};

namespace detail {

inline bool parse_count(const std::string& raw, long long& out) {
  std::string s = text::trim(raw);
  if (s.empty()) {
    out = 0;  // empty engagement cells read as zero
    return true;
  }
  if (s.find_first_not_of("0123456789") != std::string::npos) return false;
  try {
    out = std::stoll(s);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

inline std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string::npos) {
      if (start < s.size()) out.push_back(s.substr(start));
      break;
    }
    if (nl > start) out.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

}  // namespace detail

// reads posts from csv. the header must contain every mapped column.
// in lenient mode (the default) bad rows are skipped and reported; in
// strict mode the first bad row is fatal.
inline IngestResult ingest_csv(std::istream& in,
                               const ColumnMap& columns = {},
                               bool strict = false) {
  csv::Reader reader(in);
  std::vector<std::string> header;
  if (!reader.next_row(header)) throw MissingColumn("post_id");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i)
    index[text::trim(header[i])] = i;
  std::map<std::string, std::size_t> at;  // logical -> column index
  for (const auto& [logical, csv_name] : columns.names) {
    auto it = index.find(csv_name);
    if (it == index.end()) throw MissingColumn(csv_name);
    at[logical] = it->second;
  }

  IngestResult out;
  std::set<std::string> seen_ids;
  std::vector<std::string> row;
  while (reader.next_row(row)) {
    const std::size_t line = reader.row_line();
    auto fail = [&](const std::string& why) {
      if (strict) throw MalformedRow(line, why);
      out.issues.push_back({line, why});
    };
    if (row.size() != header.size()) {
      fail("expected " + std::to_string(header.size()) + " fields, got " +
           std::to_string(row.size()));
      continue;
    }
    RawPost p;
    p.post_id = text::trim(row[at.at("post_id")]);
    if (p.post_id.empty()) {
      fail("empty post_id");
      continue;
    }
    if (!seen_ids.insert(p.post_id).second) {
      fail("duplicate post_id " + p.post_id);
      continue;
    }
    p.account_id = text::trim(row[at.at("account_id")]);
    p.posted_at = text::trim(row[at.at("posted_at")]);
    bool counts_ok = detail::parse_count(row[at.at("reposts")], p.reposts) &&
                     detail::parse_count(row[at.at("likes")], p.likes) &&
                     detail::parse_count(row[at.at("comments")], p.comments);
    if (!counts_ok) {
      seen_ids.erase(p.post_id);
      fail("non-numeric engagement count");
      continue;
    }
    p.body_text = row[at.at("body_text")];
    p.image_texts = detail::split_lines(row[at.at("image_texts")]);
    out.posts.push_back(std::move(p));
  }
  return out;
}

namespace detail {

inline bool is_url_char(char c) {
  if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
      (c >= '0' && c <= '9'))
    return true;
  switch (c) {
    case '-': case '.': case '_': case '~': case ':': case '/': case '?':
    case '#': case '@': case '!': case '$': case '&': case '*': case '+':
    case ',': case ';': case '=': case '%':
      return true;
    default:
      return false;
  }
}

inline bool is_host_boundary(char c) {
  return !((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '.' || c == '-');
}

}  // namespace detail

// removes scheme URLs and bare short-link references (t.cn style).
inline std::string strip_urls(const std::string& s) {
  static const std::vector<std::string> kSchemes = {"https://", "http://"};
  static const std::vector<std::string> kBareHosts = {"t.cn/", "url.cn/",
                                                      "dwz.cn/"};
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t skip = 0;
    for (const auto& scheme : kSchemes) {
      if (s.compare(i, scheme.size(), scheme) == 0) {
        skip = scheme.size();
        while (i + skip < s.size() && detail::is_url_char(s[i + skip]))
          ++skip;
        break;
      }
    }
    if (skip == 0) {
      for (const auto& host : kBareHosts) {
        if (s.compare(i, host.size(), host) != 0) continue;
        if (i > 0 && !detail::is_host_boundary(s[i - 1])) continue;
        std::size_t k = i + host.size();
        std::size_t path = 0;
        while (k + path < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[k + path])) != 0))
          ++path;
        if (path > 0) {
          skip = host.size() + path;
          break;
        }
      }
    }
    if (skip > 0) {
      i += skip;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

namespace detail {

// the class filter behind normalize_text. keep_at preserves '@' so a later
// mention-stripping pass can still see mention tokens.
inline std::string normalize_impl(const std::string& s, bool keep_at) {
  std::string no_urls = strip_urls(s);
  std::string filtered;
  filtered.reserve(no_urls.size());
  std::size_t i = 0;
  while (i < no_urls.size()) {
    char32_t cp = text::decode_at(no_urls, i);
    if (text::is_cjk(cp) || text::is_ascii_digit(cp) ||
        text::is_fullwidth_digit(cp) || text::is_keep_punct(cp) ||
        text::is_space(cp) || (keep_at && cp == '@')) {
      text::append(filtered, cp);
    }
  }
  return text::collapse_spaces(filtered);
}

}  // namespace detail

// keeps CJK ideographs, digits (both widths), standard punctuation, and
// whitespace; strips URLs first; collapses whitespace runs; trims.
inline std::string normalize_text(const std::string& s) {
  return detail::normalize_impl(s, false);
}

// deletes @mention tokens. a token is '@' plus the following run of
// characters that are not whitespace, punctuation, or another '@'; the
// whitespace run right after a removed token goes with it.
inline std::string strip_mentions(const std::string& s) {
  std::vector<char32_t> cps = text::decode(s);
  std::vector<char32_t> out;
  out.reserve(cps.size());
  std::size_t i = 0;
  auto is_tail = [](char32_t c) {
    return !text::is_space(c) && !text::is_keep_punct(c) && c != '@';
  };
  while (i < cps.size()) {
    if (cps[i] == '@') {
      ++i;
      while (i < cps.size() && is_tail(cps[i])) ++i;
      while (i < cps.size() && text::is_space(cps[i])) ++i;
      continue;
    }
    out.push_back(cps[i++]);
  }
  return text::encode(out);
}

inline std::size_t count_cjk(const std::string& s) {
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (text::is_cjk(text::decode_at(s, i))) ++n;
  }
  return n;
}

enum class DropReason { kNone, kTooShort, kExactDuplicate, kMentionDuplicate };

inline std::string drop_reason_name(DropReason r) {
  switch (r) {
    case DropReason::kNone: return "none";
    case DropReason::kTooShort: return "too_short";
    case DropReason::kExactDuplicate: return "exact_duplicate";
    case DropReason::kMentionDuplicate: return "mention_duplicate";
  }
  throw Error("unreachable drop reason");
}

struct BriefingRecord {
  std::string record_id;       // equals the source post id
  std::string source_post_id;
  std::string text;            // fully normalized briefing text
  std::size_t cjk_count = 0;
  bool dropped = false;
  DropReason drop_reason = DropReason::kNone;
  bool operator==(const BriefingRecord&) const = default;
};

struct CleaningStats {
  std::size_t input_count = 0;
  std::size_t url_stripped_count = 0;
  std::size_t short_dropped_count = 0;
  std::size_t duplicate_dropped_count = 0;
  std::size_t output_count = 0;
};

struct CleanConfig {
  std::size_t min_length = 15;  // minimum CJK ideographs to keep a post
};

struct CleanResult {
  std::vector<BriefingRecord> records;  // kept and dropped, input order
  CleaningStats stats;
};

// the full pipeline. body and image texts are joined with newlines, then:
// URL removal and class filtering (keeping '@' alive for the mention pass),
// mention stripping, final normalization, length filter, duplicate removal
// (first occurrence kept). duplicates whose texts already matched before
// mention stripping count as exact; ones that only collide afterwards count
// as mention duplicates.
inline CleanResult clean_pipeline(const std::vector<RawPost>& posts,
                                  const CleanConfig& config = {}) {
  CleanResult out;
  out.stats.input_count = posts.size();
  std::map<std::string, std::string> kept_exact_key;  // final -> exact key
  for (const auto& post : posts) {
    std::string base = post.body_text;
    for (const auto& seg : post.image_texts) {
      base += '\n';
      base += seg;
    }
    if (strip_urls(base) != base) ++out.stats.url_stripped_count;

    const std::string with_mentions = detail::normalize_impl(base, true);
    const std::string final_text =
        normalize_text(strip_mentions(with_mentions));
    const std::string exact_key = normalize_text(base);

    BriefingRecord rec;
    rec.record_id = post.post_id;
    rec.source_post_id = post.post_id;
    rec.text = final_text;
    rec.cjk_count = count_cjk(final_text);

    if (rec.cjk_count < config.min_length) {
      rec.dropped = true;
      rec.drop_reason = DropReason::kTooShort;
      ++out.stats.short_dropped_count;
    } else if (auto it = kept_exact_key.find(final_text);
               it != kept_exact_key.end()) {
      rec.dropped = true;
      rec.drop_reason = it->second == exact_key
                            ? DropReason::kExactDuplicate
                            : DropReason::kMentionDuplicate;
      ++out.stats.duplicate_dropped_count;
    } else {
      kept_exact_key.emplace(final_text, exact_key);
      ++out.stats.output_count;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace briefkit::corpus
