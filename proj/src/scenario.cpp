#include "p2pgrid/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "p2pgrid/errors.hpp"

namespace p2pgrid::scenario {
namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "", "cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, line_of(text, e.byte), "", "malformed JSON");
  }
}

// Typed field access with field-path diagnostics.
class Fields {
public:
  Fields(const json& node, std::string source, std::string path)
      : node_(node), source_(std::move(source)), path_(std::move(path)) {
    if (!node_.is_object()) fail("", "expected an object");
  }

  bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }

  double number(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  long long integer(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<long long>();
  }
  long long integer_or(const char* key, long long fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  std::string text(const char* key) const {
    const json& v = at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    fail(key, "expected a string");
  }
  std::string text_or(const char* key, std::string fallback) const {
    return has(key) ? text(key) : fallback;
  }

  const json& array(const char* key) const {
    const json& v = at(key);
    if (!v.is_array()) fail(key, "expected an array");
    return v;
  }

  const json& at(const char* key) const {
    if (!has(key)) fail(key, "missing field");
    return node_.at(key);
  }

  std::string child(const char* key, std::size_t index) const {
    return path_ + (path_.empty() ? "" : ".") + key + "[" + std::to_string(index) + "]";
  }
  std::string child(const char* key) const { return path_ + (path_.empty() ? "" : ".") + key; }
  const std::string& source() const { return source_; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::string field = path_;
    if (!key.empty()) field += (field.empty() ? "" : ".") + key;
    throw ParseError(source_, 0, field, what);
  }

private:
  const json& node_;
  std::string source_;
  std::string path_;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  for (;;) {
    const auto comma = rest.find(',');
    cells.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return cells;
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

settlement::TariffSchedule parse_tariffs(const Fields& f) {
  settlement::TariffSchedule t = settlement::default_tariffs();
  t.fit = f.number_or("fit", t.fit);
  t.off_peak = f.number_or("off_peak", t.off_peak);
  t.on_peak = f.number_or("on_peak", t.on_peak);
  if (f.has("peak_windows")) {
    t.peak_windows.clear();
    const json& windows = f.array("peak_windows");
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const json& w = windows[i];
      const auto start = w.is_array() && w.size() == 2 && w[0].is_string()
                             ? parse_clock(w[0].get<std::string>())
                             : std::nullopt;
      const auto end = w.is_array() && w.size() == 2 && w[1].is_string()
                           ? parse_clock(w[1].get<std::string>())
                           : std::nullopt;
      if (!start || !end)
        throw ParseError(f.source(), 0, f.child("peak_windows", i), "expected [\"HH:MM\", \"HH:MM\"]");
      t.peak_windows.push_back({*start, *end});
    }
  }
  return t;
}

}  // namespace

double ProsumerProfile::price_at(std::size_t t) const {
  if (t < price_override.size() && price_override[t]) return *price_override[t];
  return declared_price;
}

std::map<ProsumerId, BusId> Scenario::placement() const {
  std::map<ProsumerId, BusId> out;
  for (const auto& p : profiles) out.emplace(p.prosumer, p.bus);
  return out;
}

std::string format_clock(double minutes_after_midnight) {
  const long total = std::lround(minutes_after_midnight);
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02ld:%02ld", (total / 60) % 100, total % 60);
  return buf;
}

std::optional<int> parse_clock(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return std::nullopt;
  int hours = 0;
  int minutes = 0;
  const char* b = text.data();
  const char* e = text.data() + text.size();
  auto r1 = std::from_chars(b, b + colon, hours);
  auto r2 = std::from_chars(b + colon + 1, e, minutes);
  if (r1.ec != std::errc{} || r1.ptr != b + colon || r2.ec != std::errc{} || r2.ptr != e)
    return std::nullopt;
  if (hours < 0 || minutes < 0 || minutes >= 60 || hours > 24 || (hours == 24 && minutes != 0))
    return std::nullopt;
  return hours * 60 + minutes;
}

grid::NetworkModel parse_network(const std::string& text, const std::string& source) {
  const json root = parse_json(text, source);
  const Fields f(root, source, "");
  grid::NetworkModel model;
  model.name = f.text_or("name", "");
  model.description = f.text_or("description", "");
  model.base_kva = f.number("base_kva");
  model.base_kv = f.number("base_kv");

  const json& buses = f.array("buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const Fields b(buses[i], source, f.child("buses", i));
    grid::Bus bus;
    bus.id = static_cast<BusId>(b.integer("id"));
    const std::string kind = b.text_or("kind", "load");
    if (kind == "slack") bus.kind = grid::BusKind::Slack;
    else if (kind == "load") bus.kind = grid::BusKind::Load;
    else b.fail("kind", "expected \"slack\" or \"load\"");
    bus.p_load = b.number_or("p_kw", 0.0);
    bus.q_load = b.number_or("q_kvar", 0.0);
    bus.nominal_v = b.number_or("nominal_kv", model.base_kv);
    model.buses.push_back(bus);
  }
  const json& branches = f.array("branches");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const Fields b(branches[i], source, f.child("branches", i));
    model.branches.push_back({static_cast<BusId>(b.integer("from")), static_cast<BusId>(b.integer("to")),
                              b.number("r_ohm"), b.number("x_ohm")});
  }
  return model;
}

grid::NetworkModel load_network(const std::filesystem::path& path) {
  return parse_network(read_file(path), path.string());
}

ProfileTable parse_profiles(const std::string& text, int interval_minutes, const std::string& source) {
  if (interval_minutes <= 0 || (24 * 60) % interval_minutes != 0)
    throw ConfigError("interval length must divide the day evenly");
  const std::size_t intervals = static_cast<std::size_t>(24 * 60 / interval_minutes);

  ProfileTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  bool has_price = false;
  std::set<std::pair<std::string, std::size_t>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto cells = split_csv(stripped);
    if (!header_seen) {
      header_seen = true;
      if (cells.size() < 3 || cells[0] != "interval_start" || cells[1] != "prosumer_id" ||
          cells[2] != "net_load_kw" || (cells.size() == 4 && cells[3] != "price_ckwh") ||
          cells.size() > 4)
        throw ParseError(source, line_no, "header",
                         "expected interval_start,prosumer_id,net_load_kw[,price_ckwh]");
      has_price = cells.size() == 4;
      continue;
    }
    const std::size_t columns = has_price ? 4 : 3;
    if (cells.size() != columns && !(has_price && cells.size() == 3))
      throw ParseError(source, line_no, "", "expected " + std::to_string(columns) + " columns");

    const auto minute = parse_clock(cells[0]);
    if (!minute || *minute >= 24 * 60 || *minute % interval_minutes != 0)
      throw ParseError(source, line_no, "interval_start",
                       "'" + cells[0] + "' is not an interval start on the " +
                           std::to_string(interval_minutes) + "-minute grid");
    const std::size_t t = static_cast<std::size_t>(*minute / interval_minutes);
    const std::string& id = cells[1];
    if (id.empty()) throw ParseError(source, line_no, "prosumer_id", "empty prosumer id");
    const auto kw = to_double(cells[2]);
    if (!kw) throw ParseError(source, line_no, "net_load_kw", "'" + cells[2] + "' is not a number");
    if (!seen.insert({id, t}).second)
      throw ParseError(source, line_no, "", "duplicate row for " + id + " at " + cells[0]);

    auto& series = table.net_load[id];
    series.resize(intervals, 0.0);
    series[t] = *kw;
    auto& prices = table.price[id];
    prices.resize(intervals);
    if (has_price && cells.size() == 4 && !cells[3].empty()) {
      const auto price = to_double(cells[3]);
      if (!price || *price < 0.0)
        throw ParseError(source, line_no, "price_ckwh", "'" + cells[3] + "' is not a price");
      prices[t] = *price;
    }
  }
  if (!header_seen) throw ParseError(source, 0, "header", "missing header row");
  return table;
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir,
                        const std::string& source) {
  const json root = parse_json(text, source);
  const Fields f(root, source, "");

  Scenario sc;
  sc.name = f.text_or("name", "scenario");

  const long long minutes = f.integer_or("interval_minutes", 15);
  if (minutes <= 0 || (24 * 60) % minutes != 0)
    f.fail("interval_minutes", "must divide the day evenly");

  if (f.has("tariffs")) sc.tariffs = parse_tariffs(Fields(f.at("tariffs"), source, "tariffs"));
  sc.tariffs.interval_hours = static_cast<double>(minutes) / 60.0;
  sc.tariffs.validate();

  if (f.has("voltage_limits")) {
    const Fields v(f.at("voltage_limits"), source, "voltage_limits");
    sc.limits.lower = v.number_or("lower", sc.limits.lower);
    sc.limits.upper = v.number_or("upper", sc.limits.upper);
  }
  sc.limits.validate();

  if (f.has("solver")) {
    const Fields s(f.at("solver"), source, "solver");
    sc.solver = grid::solver_settings(s.number_or("tolerance", 1e-8),
                                      static_cast<int>(s.integer_or("max_iterations", 100)));
  }

  const json& net = f.at("network");
  if (net.is_string()) {
    sc.network = grid::validate_network(load_network(base_dir / net.get<std::string>()));
  } else {
    sc.network = grid::validate_network(parse_network(net.dump(), source + ":network"));
  }

  const std::size_t intervals = static_cast<std::size_t>(sc.intervals());
  std::set<int> bcros;
  if (f.has("prosumers")) {
    const json& list = f.array("prosumers");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Fields p(list[i], source, f.child("prosumers", i));
      ProsumerProfile profile;
      profile.prosumer = ProsumerId(p.text("id"));
      profile.bus = static_cast<BusId>(p.integer("bus"));
      profile.declared_price = p.number("declared_price");
      profile.bcro = static_cast<int>(p.integer("bcro"));
      if (profile.declared_price < 0.0) p.fail("declared_price", "must be >= 0");
      if (profile.bcro < 1) p.fail("bcro", "must be >= 1");
      if (!bcros.insert(profile.bcro).second) p.fail("bcro", "duplicate bcro " + std::to_string(profile.bcro));
      for (const auto& other : sc.profiles)
        if (other.prosumer == profile.prosumer) p.fail("id", "duplicate prosumer " + profile.prosumer.str());
      if (!sc.network.has_bus(profile.bus))
        throw CrossReferenceError(std::to_string(profile.bus),
                                  "prosumer " + profile.prosumer.str() + " references unknown bus " +
                                      std::to_string(profile.bus));
      if (profile.bus == sc.network.slack())
        throw CrossReferenceError(std::to_string(profile.bus),
                                  "prosumer " + profile.prosumer.str() + " placed on slack bus " +
                                      std::to_string(profile.bus));
      profile.net_load.assign(intervals, 0.0);
      sc.profiles.push_back(std::move(profile));
    }
  }

  if (f.has("profiles")) {
    const auto path = base_dir / f.text("profiles");
    ProfileTable table = parse_profiles(read_file(path), static_cast<int>(minutes), path.string());
    for (auto& [id, series] : table.net_load) {
      auto it = std::find_if(sc.profiles.begin(), sc.profiles.end(),
                             [&](const ProsumerProfile& p) { return p.prosumer.str() == id; });
      if (it == sc.profiles.end())
        throw CrossReferenceError(id, path.string() + ": profile for undeclared prosumer " + id);
      it->net_load = std::move(series);
      auto& prices = table.price[id];
      if (std::any_of(prices.begin(), prices.end(), [](const auto& p) { return p.has_value(); }))
        it->price_override = std::move(prices);
    }
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_file(path), path.parent_path(), path.string());
}

std::pair<std::vector<market::Offer>, std::vector<market::Bid>> derive_interval_market(
    const std::vector<ProsumerProfile>& profiles, int t) {
  std::pair<std::vector<market::Offer>, std::vector<market::Bid>> out;
  if (t < 0) return out;
  const auto ti = static_cast<std::size_t>(t);
  for (const auto& p : profiles) {
    if (ti >= p.net_load.size()) continue;
    const double net = p.net_load[ti];
    if (net < 0.0) out.first.push_back({p.prosumer, p.price_at(ti), -net, p.bcro});
    else if (net > 0.0) out.second.push_back({p.prosumer, p.price_at(ti), net, p.bcro});
  }
  return out;
}

}  // namespace p2pgrid::scenario
