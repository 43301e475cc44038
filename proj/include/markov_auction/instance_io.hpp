#pragma once

// Instance files and synthetic instances.
//
// JSON:  {"slots": 2, "bidders": [{"id": "a", "bid": 2, "ctr": 0.5, "cont": 0.75}, ...]}
// CSV:   header row id,bid,ctr,cont (any column order), one bidder per line;
//        the slot count comes from the command line.
//
// String ids are mapped to dense ids 0..n-1 in file order; `names` keeps the
// originals for output.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "markov_auction/model.hpp"

namespace markov_auction {

class ValidationError : public Error {
 public:
  using Error::Error;
};

struct LoadedInstance {
  AuctionInstance instance;
  std::vector<std::string> names;  // names[id] is the id as written in the file

  const std::string& name(BidderId id) const { return names.at(static_cast<std::size_t>(id)); }

  std::optional<BidderId> find(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return static_cast<BidderId>(i);
    }
    return std::nullopt;
  }
};

namespace detail {

struct RawBidder {
  std::string name;
  double bid = 0.0;
  double ctr = 0.0;
  double cont = 0.0;
};

// Returns an error message for the first out-of-range field, or nothing.
inline std::optional<std::pair<std::string, std::string>> check_fields(const RawBidder& b) {
  if (!std::isfinite(b.bid) || b.bid < 0.0) return std::pair{std::string("bid"), std::string("must be finite and >= 0")};
  if (!(b.ctr > 0.0 && b.ctr <= 1.0)) return std::pair{std::string("ctr"), std::string("must be in (0, 1]")};
  if (!(b.cont >= 0.0 && b.cont < 1.0)) return std::pair{std::string("cont"), std::string("must be in [0, 1)")};
  return std::nullopt;
}

inline LoadedInstance assemble(std::vector<RawBidder> raw, std::size_t slots) {
  std::vector<Bidder> bidders;
  std::vector<std::string> names;
  bidders.reserve(raw.size());
  names.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    bidders.emplace_back(static_cast<BidderId>(i), raw[i].bid, raw[i].ctr, raw[i].cont);
    names.push_back(std::move(raw[i].name));
  }
  return LoadedInstance{AuctionInstance(std::move(bidders), slots), std::move(names)};
}

inline std::string quoted(std::string_view s) { return "\"" + std::string(s) + "\""; }

}  // namespace detail

/// Throws ValidationError naming the offending field (and bidder, when known).
inline LoadedInstance parse_instance_json(std::string_view text, std::optional<std::size_t> slots_override = {}) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("top level: expected an object with \"slots\" and \"bidders\"");

  std::size_t slots = 0;
  if (slots_override) {
    slots = *slots_override;
  } else {
    auto it = doc.find("slots");
    if (it == doc.end()) throw ValidationError("slots: missing (or pass --slots)");
    if (!it->is_number_integer() || it->get<std::int64_t>() < 1) throw ValidationError("slots: must be an integer >= 1");
    slots = it->get<std::size_t>();
  }
  if (slots == 0) throw ValidationError("slots: must be >= 1");

  auto list = doc.find("bidders");
  if (list == doc.end() || !list->is_array()) throw ValidationError("bidders: expected an array");

  std::vector<detail::RawBidder> raw;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const json& item = (*list)[i];
    const std::string where = "bidders[" + std::to_string(i) + "]";
    if (!item.is_object()) throw ValidationError(where + ": expected an object");
    detail::RawBidder b;
    auto id = item.find("id");
    if (id == item.end()) throw ValidationError(where + ".id: missing");
    if (id->is_string()) {
      b.name = id->get<std::string>();
    } else if (id->is_number_integer()) {
      b.name = id->dump();
    } else {
      throw ValidationError(where + ".id: expected a string");
    }
    if (!seen.insert(b.name).second) throw ValidationError(where + ".id: duplicate id " + detail::quoted(b.name));

    auto number = [&](const char* field) {
      auto f = item.find(field);
      if (f == item.end() || !f->is_number()) {
        throw ValidationError(where + "." + field + ": expected a number (bidder " + detail::quoted(b.name) + ")");
      }
      return f->get<double>();
    };
    b.bid = number("bid");
    b.ctr = number("ctr");
    b.cont = number("cont");
    if (auto bad = detail::check_fields(b)) {
      throw ValidationError(where + "." + bad->first + ": " + bad->second + " (bidder " + detail::quoted(b.name) + ")");
    }
    raw.push_back(std::move(b));
  }
  return detail::assemble(std::move(raw), slots);
}

inline LoadedInstance parse_instance_csv(std::string_view text, std::optional<std::size_t> slots) {
  if (!slots || *slots == 0) throw ValidationError("slots: csv input needs --slots >= 1");

  auto split = [](std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
      cells.emplace_back(cell);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return cells;
  };

  std::vector<std::string> lines;
  {
    std::string buf(text);
    std::istringstream in(buf);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
  }

  std::size_t line_no = 0;
  auto next_nonblank = [&]() -> std::optional<std::vector<std::string>> {
    while (line_no < lines.size()) {
      const std::string& line = lines[line_no++];
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      return split(line);
    }
    return std::nullopt;
  };

  auto header = next_nonblank();
  if (!header) throw ValidationError("line 1: missing header row id,bid,ctr,cont");
  int col_id = -1, col_bid = -1, col_ctr = -1, col_cont = -1;
  for (std::size_t c = 0; c < header->size(); ++c) {
    const std::string& h = (*header)[c];
    if (h == "id") col_id = static_cast<int>(c);
    else if (h == "bid") col_bid = static_cast<int>(c);
    else if (h == "ctr") col_ctr = static_cast<int>(c);
    else if (h == "cont") col_cont = static_cast<int>(c);
  }
  if (col_id < 0 || col_bid < 0 || col_ctr < 0 || col_cont < 0) {
    throw ValidationError("line " + std::to_string(line_no) + ": header must name columns id,bid,ctr,cont");
  }

  std::vector<detail::RawBidder> raw;
  std::unordered_set<std::string> seen;
  while (auto cells = next_nonblank()) {
    const std::string where = "line " + std::to_string(line_no);
    if (cells->size() != header->size()) {
      throw ValidationError(where + ": expected " + std::to_string(header->size()) + " fields, got " +
                            std::to_string(cells->size()));
    }
    detail::RawBidder b;
    b.name = (*cells)[static_cast<std::size_t>(col_id)];
    if (b.name.empty()) throw ValidationError(where + ", field id: empty");
    if (!seen.insert(b.name).second) throw ValidationError(where + ", field id: duplicate id " + detail::quoted(b.name));
    auto number = [&](int col, const char* field) {
      const std::string& s = (*cells)[static_cast<std::size_t>(col)];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ValidationError(where + ", field " + field + ": not a number " + detail::quoted(s) + " (bidder " +
                              detail::quoted(b.name) + ")");
      }
      return v;
    };
    b.bid = number(col_bid, "bid");
    b.ctr = number(col_ctr, "ctr");
    b.cont = number(col_cont, "cont");
    if (auto bad = detail::check_fields(b)) {
      throw ValidationError(where + ", field " + bad->first + ": " + bad->second + " (bidder " + detail::quoted(b.name) +
                            ")");
    }
    raw.push_back(std::move(b));
  }
  return detail::assemble(std::move(raw), *slots);
}

inline nlohmann::ordered_json instance_to_json(const LoadedInstance& loaded) {
  nlohmann::ordered_json doc;
  doc["slots"] = loaded.instance.slots();
  doc["bidders"] = nlohmann::ordered_json::array();
  for (const Bidder& b : loaded.instance.bidders()) {
    doc["bidders"].push_back({{"id", loaded.name(b.id())}, {"bid", b.bid()}, {"ctr", b.ctr()}, {"cont", b.cont()}});
  }
  return doc;
}

/// Seeded synthetic auction: bids log-uniform in [0.01, 10], ctr uniform in
/// (0, 1], cont uniform in [0, 0.99). Ids are 0..n-1.
inline AuctionInstance synthetic_instance(std::size_t n, std::size_t slots, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // 53 random bits -> [0, 1); avoids implementation-defined distributions so
  // a seed means the same instance everywhere.
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Bidder> bidders;
  bidders.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double bid = 0.01 * std::pow(1000.0, unit());
    const double ctr = 1.0 - unit();
    const double cont = 0.99 * unit();
    bidders.emplace_back(static_cast<BidderId>(i), bid, ctr, cont);
  }
  return AuctionInstance(std::move(bidders), slots);
}

}  // namespace markov_auction
