#ifndef FAIRBOOST_RATINGS_HPP_
#define FAIRBOOST_RATINGS_HPP_

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "fairboost/error.hpp"
#include "fairboost/random.hpp"

namespace fairboost {

using Index = std::uint32_t;

inline constexpr double kMinRating = 1.0;
inline constexpr double kMaxRating = 5.0;

inline double clip_rating(double r) noexcept { return std::clamp(r, kMinRating, kMaxRating); }

struct Interaction {
  std::string user;
  std::string item;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Raw ingested records. Ratings lie in [1, 5] and (user, item) pairs are unique.
struct InteractionLog {
  std::vector<Interaction> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
};

/// One observed (user, item, rating) triple on dense indices.
struct Rating {
  Index user = 0;
  Index item = 0;
  double value = 0.0;

  friend bool operator==(const Rating&, const Rating&) = default;
};

struct Dataset {
  Index n_users = 0;
  Index n_items = 0;
  std::vector<Rating> train;
  std::vector<Rating> test;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, Index> user_index;
  std::unordered_map<std::string, Index> item_index;
};

namespace detail {

/// Line reader over plain or gzip-compressed files (zlib reads both).
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path)
      : source_(path.string()), file_(gzopen(source_.c_str(), "rb"), &gzclose) {
    if (!file_) throw InputError("cannot open " + source_);
  }

  bool next(std::string& line) {
    line.clear();
    char buf[4096];
    while (gzgets(file_.get(), buf, sizeof buf) != nullptr) {
      line.append(buf);
      if (!line.empty() && line.back() == '\n') break;
    }
    if (line.empty()) return false;
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    ++line_no_;
    return true;
  }

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& source() const noexcept { return source_; }

 private:
  std::string source_;
  std::unique_ptr<gzFile_s, int (*)(gzFile)> file_;
  std::size_t line_no_ = 0;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

/// Integer seconds, or an ISO calendar date (YYYY-MM-DD) converted to seconds.
inline std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  s = trim(s);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc{} && p == s.data() + s.size() && !s.empty()) return v;
  int y = 0;
  unsigned mo = 0, d = 0;
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
    auto ok = [](std::string_view f, auto& out) {
      auto [q, e] = std::from_chars(f.data(), f.data() + f.size(), out);
      return e == std::errc{} && q == f.data() + f.size();
    };
    if (ok(s.substr(0, 4), y) && ok(s.substr(5, 2), mo) && ok(s.substr(8, 2), d)) {
      std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo},
                                      std::chrono::day{d}};
      if (ymd.ok()) {
        auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
        return static_cast<std::int64_t>(days) * 86400;
      }
    }
  }
  return std::nullopt;
}

inline void check_rating(double r, const LineReader& in) {
  if (!std::isfinite(r) || r < kMinRating || r > kMaxRating) {
    throw ValidationError(in.source() + ":" + std::to_string(in.line_no()) + ": rating " +
                          std::to_string(r) + " outside [1, 5]");
  }
}

}  // namespace detail

/// Collapses duplicate (user, item) pairs. The survivor is the record with the
/// latest timestamp; among equal or missing timestamps the later record wins.
/// Survivors keep the position of the pair's first occurrence.
inline InteractionLog deduplicate(std::vector<Interaction> records) {
  InteractionLog log;
  log.records.reserve(records.size());
  std::unordered_map<std::string, std::size_t> seen;
  seen.reserve(records.size());
  for (auto& rec : records) {
    std::string key = rec.user;
    key.push_back('\x1f');
    key += rec.item;
    auto [it, inserted] = seen.try_emplace(std::move(key), log.records.size());
    if (inserted) {
      log.records.push_back(std::move(rec));
      continue;
    }
    auto& kept = log.records[it->second];
    bool newer = !kept.timestamp || !rec.timestamp || *rec.timestamp >= *kept.timestamp;
    if (newer) kept = std::move(rec);
  }
  return log;
}

/// MovieLens `u.data`: `user \t item \t rating \t timestamp` per line.
inline InteractionLog load_movielens(const std::filesystem::path& path) {
  detail::LineReader in(path);
  std::vector<Interaction> records;
  std::string line;
  while (in.next(line)) {
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 4) {
      throw IngestionError(in.source(), in.line_no(),
                           "expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    }
    auto rating = detail::parse_double(fields[2]);
    auto ts = detail::parse_timestamp(fields[3]);
    auto user = detail::trim(fields[0]);
    auto item = detail::trim(fields[1]);
    if (!rating || !ts || user.empty() || item.empty()) {
      throw IngestionError(in.source(), in.line_no(), "malformed record '" + line + "'");
    }
    detail::check_rating(*rating, in);
    records.push_back({std::string(user), std::string(item), *rating, *ts});
  }
  return deduplicate(std::move(records));
}

/// Column reference by zero-based index or by header name.
using Column = std::variant<std::size_t, std::string>;

struct CsvSchema {
  Column user = std::size_t{0};
  Column item = std::size_t{1};
  Column rating = std::size_t{2};
  std::optional<Column> timestamp;
  char delimiter = ',';
  bool has_header = true;
};

inline InteractionLog load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  detail::LineReader in(path);
  std::vector<std::string> header;
  std::string line;

  bool named = std::holds_alternative<std::string>(schema.user) ||
               std::holds_alternative<std::string>(schema.item) ||
               std::holds_alternative<std::string>(schema.rating) ||
               (schema.timestamp && std::holds_alternative<std::string>(*schema.timestamp));
  if (named && !schema.has_header) throw SchemaError("named columns require a header row");

  if (schema.has_header) {
    if (!in.next(line)) {
      if (named) throw SchemaError(in.source() + ": empty file, no header to resolve columns");
      return {};
    }
    for (auto f : detail::split(line, schema.delimiter)) header.emplace_back(detail::trim(f));
  }

  auto resolve = [&](const Column& c, const char* role) -> std::size_t {
    if (auto* idx = std::get_if<std::size_t>(&c)) {
      if (!header.empty() && *idx >= header.size()) {
        throw SchemaError(std::string(role) + " column index " + std::to_string(*idx) +
                          " beyond header width " + std::to_string(header.size()));
      }
      return *idx;
    }
    const auto& name = std::get<std::string>(c);
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw SchemaError(std::string(role) + " column '" + name + "' not in header");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cu = resolve(schema.user, "user");
  const std::size_t ci = resolve(schema.item, "item");
  const std::size_t cr = resolve(schema.rating, "rating");
  std::optional<std::size_t> ct;
  if (schema.timestamp) ct = resolve(*schema.timestamp, "timestamp");
  const std::size_t width = std::max({cu, ci, cr, ct.value_or(0)}) + 1;

  std::vector<Interaction> records;
  while (in.next(line)) {
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(line, schema.delimiter);
    if (fields.size() < width) {
      throw SchemaError(in.source() + ":" + std::to_string(in.line_no()) + ": mapped column " +
                        std::to_string(width - 1) + " missing (row has " +
                        std::to_string(fields.size()) + " fields)");
    }
    auto user = detail::trim(fields[cu]);
    auto item = detail::trim(fields[ci]);
    auto rating = detail::parse_double(fields[cr]);
    if (!rating || user.empty() || item.empty()) {
      throw IngestionError(in.source(), in.line_no(), "malformed record '" + line + "'");
    }
    detail::check_rating(*rating, in);
    std::optional<std::int64_t> ts;
    if (ct && !detail::trim(fields[*ct]).empty()) {
      ts = detail::parse_timestamp(fields[*ct]);
      if (!ts) throw IngestionError(in.source(), in.line_no(), "malformed timestamp");
    }
    records.push_back({std::string(user), std::string(item), *rating, ts});
  }
  return deduplicate(std::move(records));
}

namespace detail {

inline Index intern(std::unordered_map<std::string, Index>& map, std::vector<std::string>& ids,
                    const std::string& key) {
  auto [it, inserted] = map.try_emplace(key, static_cast<Index>(ids.size()));
  if (inserted) ids.push_back(key);
  return it->second;
}

}  // namespace detail

/// Number of training records for a split of `n` records at `fraction`.
inline std::size_t train_count(std::size_t n, double fraction) {
  // The epsilon absorbs representation error in products like 0.8 * 100000.
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

/// Orders records by timestamp (ties by user id, then item id) and assigns the
/// first ceil(fraction * N) to train. If any record lacks a timestamp the
/// whole log is shuffled with `seed` instead. Indices are assigned in order of
/// first appearance, train before test.
inline Dataset temporal_split(const InteractionLog& log, double fraction, std::uint64_t seed = 0) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw SplitError("train fraction must lie in (0, 1), got " + std::to_string(fraction));
  }
  if (log.size() < 2) throw SplitError("need at least 2 records to split");

  std::vector<const Interaction*> order;
  order.reserve(log.size());
  for (const auto& r : log.records) order.push_back(&r);

  bool timed = std::all_of(order.begin(), order.end(), [](auto* r) { return r->timestamp.has_value(); });
  if (timed) {
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) {
      return std::tie(*a->timestamp, a->user, a->item) < std::tie(*b->timestamp, b->user, b->item);
    });
  } else {
    Rng rng(derive_seed(seed, "split"));
    std::shuffle(order.begin(), order.end(), rng);
  }

  const std::size_t n_train = train_count(order.size(), fraction);
  Dataset ds;
  ds.train.reserve(n_train);
  ds.test.reserve(order.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& r = *order[i];
    Rating rt{detail::intern(ds.user_index, ds.user_ids, r.user),
              detail::intern(ds.item_index, ds.item_ids, r.item), r.rating};
    (i < n_train ? ds.train : ds.test).push_back(rt);
  }
  ds.n_users = static_cast<Index>(ds.user_ids.size());
  ds.n_items = static_cast<Index>(ds.item_ids.size());
  return ds;
}

enum class ItemGroup : std::uint8_t { kUnrated, kPopular, kNonPopular };

/// Popular items have strictly more than `tau` ratings in the counted data;
/// non-popular items have between 1 and `tau`; unrated items belong to neither.
struct PopularityPartition {
  std::size_t tau = 0;
  std::vector<Index> popular;
  std::vector<Index> non_popular;
  std::vector<ItemGroup> groups;

  ItemGroup group(Index item) const noexcept {
    return item < groups.size() ? groups[item] : ItemGroup::kUnrated;
  }
};

inline PopularityPartition partition_by_counts(std::span<const std::size_t> counts, std::size_t tau) {
  PopularityPartition p;
  p.tau = tau;
  p.groups.assign(counts.size(), ItemGroup::kUnrated);
  for (Index m = 0; m < counts.size(); ++m) {
    if (counts[m] == 0) continue;
    if (counts[m] > tau) {
      p.groups[m] = ItemGroup::kPopular;
      p.popular.push_back(m);
    } else {
      p.groups[m] = ItemGroup::kNonPopular;
      p.non_popular.push_back(m);
    }
  }
  return p;
}

inline std::vector<std::size_t> item_counts(std::span<const Rating> ratings, Index n_items) {
  std::vector<std::size_t> counts(n_items, 0);
  for (const auto& r : ratings) {
    if (r.item >= counts.size()) counts.resize(r.item + 1, 0);
    ++counts[r.item];
  }
  return counts;
}

/// Partition on training-split counts only.
inline PopularityPartition partition_popularity(const Dataset& dataset, std::size_t tau) {
  auto counts = item_counts(dataset.train, dataset.n_items);
  return partition_by_counts(counts, tau);
}

// ---------------------------------------------------------------------------
// Synthetic MNAR universes

struct SyntheticOptions {
  std::size_t latent_rank = 3;
  double max_observation_prob = 0.5;
  double noise_sd = 0.3;
};

/// A fully known rating matrix with per-cell observation probabilities and one
/// observed sample drawn from them (all of it in `observed.train`).
struct SyntheticUniverse {
  Index n_users = 0;
  Index n_items = 0;
  std::vector<double> true_matrix;        // row-major n_users x n_items
  std::vector<double> observation_probs;  // row-major n_users x n_items
  std::vector<Index> item_rank;           // 1-based popularity rank per item
  Dataset observed;
  std::uint64_t seed = 0;
  double skew = 0.0;

  double truth(Index u, Index m) const { return true_matrix[std::size_t{u} * n_items + m]; }
  double prob(Index u, Index m) const { return observation_probs[std::size_t{u} * n_items + m]; }
  std::size_t cells() const noexcept { return std::size_t{n_users} * n_items; }
};

/// Draws an observation mask from the universe's probabilities and returns the
/// observed truths. Independent Bernoulli per cell.
inline std::vector<Rating> sample_observations(const SyntheticUniverse& uni, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Rating> out;
  for (Index u = 0; u < uni.n_users; ++u) {
    for (Index m = 0; m < uni.n_items; ++m) {
      if (unif(rng) < uni.prob(u, m)) out.push_back({u, m, uni.truth(u, m)});
    }
  }
  return out;
}

/// Low-rank-plus-noise truths clipped to [1, 5]. Item m with popularity rank r
/// (a seeded permutation) is observed with probability
/// max_observation_prob * r^(-skew), so skew = 0 is MCAR.
inline SyntheticUniverse gen_synthetic_mnar(std::uint64_t seed, Index n_users, Index n_items,
                                            double skew, const SyntheticOptions& opt = {}) {
  if (n_users < 2 || n_items < 2) throw ValidationError("synthetic universe needs k, l >= 2");
  if (!(skew >= 0.0) || !std::isfinite(skew)) throw ValidationError("skew must be finite and >= 0");
  if (!(opt.max_observation_prob > 0.0 && opt.max_observation_prob <= 1.0)) {
    throw ValidationError("max_observation_prob must lie in (0, 1]");
  }

  SyntheticUniverse uni;
  uni.n_users = n_users;
  uni.n_items = n_items;
  uni.seed = seed;
  uni.skew = skew;

  Rng rng(derive_seed(seed, "truth"));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t rank = std::max<std::size_t>(opt.latent_rank, 1);
  const double factor_sd = 0.8 / std::sqrt(static_cast<double>(rank));
  std::vector<double> uf(std::size_t{n_users} * rank), vf(std::size_t{n_items} * rank);
  std::vector<double> ub(n_users), ib(n_items);
  for (auto& x : uf) x = factor_sd * normal(rng);
  for (auto& x : vf) x = factor_sd * normal(rng);
  for (auto& x : ub) x = 0.4 * normal(rng);
  for (auto& x : ib) x = 0.6 * normal(rng);

  uni.true_matrix.resize(uni.cells());
  for (Index u = 0; u < n_users; ++u) {
    for (Index m = 0; m < n_items; ++m) {
      double s = 3.5 + ub[u] + ib[m];
      for (std::size_t f = 0; f < rank; ++f) s += uf[u * rank + f] * vf[m * rank + f];
      s += opt.noise_sd * normal(rng);
      uni.true_matrix[std::size_t{u} * n_items + m] = clip_rating(s);
    }
  }

  Rng prng(derive_seed(seed, "popularity"));
  std::vector<Index> perm(n_items);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), prng);
  uni.item_rank.resize(n_items);
  for (Index r = 0; r < n_items; ++r) uni.item_rank[perm[r]] = r + 1;

  uni.observation_probs.resize(uni.cells());
  for (Index m = 0; m < n_items; ++m) {
    double p = opt.max_observation_prob * std::pow(static_cast<double>(uni.item_rank[m]), -skew);
    for (Index u = 0; u < n_users; ++u) uni.observation_probs[std::size_t{u} * n_items + m] = p;
  }

  auto& ds = uni.observed;
  ds.n_users = n_users;
  ds.n_items = n_items;
  for (Index u = 0; u < n_users; ++u) {
    ds.user_ids.push_back("u" + std::to_string(u));
    ds.user_index.emplace(ds.user_ids.back(), u);
  }
  for (Index m = 0; m < n_items; ++m) {
    ds.item_ids.push_back("i" + std::to_string(m));
    ds.item_index.emplace(ds.item_ids.back(), m);
  }
  ds.train = sample_observations(uni, derive_seed(seed, "mask"));
  return uni;
}

}  // namespace fairboost

#endif  // FAIRBOOST_RATINGS_HPP_
