#pragma once

// Constant table, CSV and JSON artifacts. Numbers are written with the
// shortest round-trip representation so files are byte-stable.

#include <atomint/constants.hpp>
#include <atomint/errors.hpp>
#include <atomint/signal.hpp>

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace atomint {

using json = nlohmann::ordered_json;

inline constexpr const char* version = "0.1.0";
inline constexpr const char* constants_env = "ATOMINT_CONSTANTS";

// ---- constant table -------------------------------------------------------

inline json species_to_json(const Species& s) {
  json levels = json::array();
  for (const auto& l : s.ground_levels) levels.push_back({{"F", l.F}, {"g_F", l.g_F}});
  return {{"mass_kg", s.mass},
          {"transition_wavelength_m", s.transition_wavelength},
          {"natural_width_rad_per_s", s.natural_width},
          {"saturation_intensity_W_per_m2", s.saturation_intensity},
          {"nuclear_spin", s.nuclear_spin},
          {"abundance", s.abundance},
          {"ground_levels", levels}};
}

// Everything the models read from outside: exact SI constants and species data.
inline json constant_table() {
  json t;
  t["format"] = "atomint-constants/1";
  t["fundamental"] = {{"planck_J_s", si::planck},
                      {"hbar_J_s", si::hbar},
                      {"bohr_magneton_J_per_T", si::bohr_magneton},
                      {"vacuum_permeability_N_per_A2", si::vacuum_permeability},
                      {"atomic_mass_unit_kg", si::atomic_mass_unit},
                      {"speed_of_light_m_per_s", si::speed_of_light}};
  t["species"] = {{"Li7", species_to_json(lithium7())}, {"Li6", species_to_json(lithium6())}};
  return t;
}

struct ConstantTable {
  json table = constant_table();
  std::string source = "builtin";

  [[nodiscard]] Species species(const std::string& name) const {
    const auto& all = table.at("species");
    if (!all.contains(name)) throw ValidationError("species", "unknown species '" + name + "'");
    const auto& j = all.at(name);
    const std::string base = "constants.species." + name;
    try {
      Species s;
      s.name = name;
      s.mass = j.at("mass_kg").get<double>();
      s.transition_wavelength = j.at("transition_wavelength_m").get<double>();
      s.natural_width = j.at("natural_width_rad_per_s").get<double>();
      s.saturation_intensity = j.at("saturation_intensity_W_per_m2").get<double>();
      s.nuclear_spin = j.at("nuclear_spin").get<double>();
      s.abundance = j.at("abundance").get<double>();
      for (const auto& l : j.at("ground_levels")) s.ground_levels.push_back({l.at("F").get<double>(), l.at("g_F").get<double>()});
      s.validate();
      return s;
    } catch (const json::exception& e) {
      throw ValidationError(base, e.what());
    } catch (const DomainError& e) {
      throw ValidationError(base, e.what());
    }
  }
};

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string(), "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

// Built-in table, or the file named by ATOMINT_CONSTANTS.
inline ConstantTable load_constant_table() {
  ConstantTable t;
  if (const char* p = std::getenv(constants_env); p != nullptr && *p != '\0') {
    t.table = read_json_file(p);
    t.source = p;
    if (!t.table.contains("species") || !t.table["species"].is_object()) {
      throw ValidationError("constants.species", "missing species block");
    }
    const auto& f = t.table.value("fundamental", json::object());
    const json builtin = constant_table()["fundamental"];
    for (const auto& [k, v] : builtin.items()) {
      if (f.contains(k) && f[k] != v) {
        throw ValidationError("constants.fundamental." + k, "exact SI values cannot be overridden");
      }
    }
  }
  return t;
}

// ---- text formatting ------------------------------------------------------

inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return {buf, res.ptr};
}

inline std::string format_number(std::int64_t x) { return std::to_string(x); }

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  template <typename... T>
  void row(T... values) {
    static_assert(sizeof...(T) > 0);
    std::string line;
    ((line += format_cell(values) + ","), ...);
    line.pop_back();
    rows_.push_back(std::move(line));
  }

  [[nodiscard]] std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += '\n';
    for (const auto& r : rows_) out += r + '\n';
    return out;
  }

 private:
  static std::string format_cell(double v) { return format_number(v); }
  static std::string format_cell(std::int64_t v) { return format_number(v); }
  static std::string format_cell(int v) { return std::to_string(v); }

  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string(), "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Columns of a numeric CSV with a header row.
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  [[nodiscard]] std::size_t column(const std::string& name, const std::string& where) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw ValidationError(where, "missing column '" + name + "'");
  }
};

inline CsvData parse_csv(const std::string& text, const std::string& where) {
  CsvData d;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  const auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(l);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!l.empty() && l.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (d.header.empty()) {
      d.header = cells;
      continue;
    }
    if (cells.size() != d.header.size()) {
      throw ValidationError(where + ":" + std::to_string(line_no), "wrong number of columns");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc{} || res.ptr != c.data() + c.size()) {
        throw ValidationError(where + ":" + std::to_string(line_no), "not a number: '" + c + "'");
      }
      row.push_back(v);
    }
    d.rows.push_back(std::move(row));
  }
  if (d.header.empty()) throw ValidationError(where, "empty CSV");
  return d;
}

// ---- hashing --------------------------------------------------------------

inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  static constexpr char digits[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[v & 0xF];
    v >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

// ---- count traces ---------------------------------------------------------

inline std::string provenance_name(Provenance p) { return p == Provenance::synthetic ? "synthetic" : "external"; }

inline std::string trace_csv(const CountTrace& t) {
  CsvTable csv({"drive_value", "counts"});
  for (const auto& s : t.samples) csv.row(s.drive, s.counts);
  return csv.str();
}

inline json trace_sidecar(const CountTrace& t) {
  return {{"counting_time_s", t.counting_time}, {"seed", t.seed}, {"provenance", provenance_name(t.provenance)}};
}

inline void write_trace(const std::filesystem::path& csv_path, const CountTrace& t) {
  write_text(csv_path, trace_csv(t));
  auto side = csv_path;
  side.replace_extension(".json");
  write_text(side, dump(trace_sidecar(t)));
}

// Reads drive_value,counts and the optional JSON sidecar next to it.
inline CountTrace read_trace(const std::filesystem::path& csv_path) {
  const auto data = parse_csv(read_text(csv_path), csv_path.string());
  const auto ix = data.column("drive_value", csv_path.string());
  const auto ic = data.column("counts", csv_path.string());
  CountTrace t;
  t.provenance = Provenance::external;
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const double c = data.rows[r][ic];
    if (c < 0.0 || c != std::floor(c)) {
      throw ValidationError(csv_path.string() + ":" + std::to_string(r + 2), "counts must be non-negative integers");
    }
    t.samples.push_back({data.rows[r][ix], static_cast<std::int64_t>(c)});
  }
  auto side = csv_path;
  side.replace_extension(".json");
  if (std::filesystem::exists(side)) {
    const auto j = read_json_file(side);
    for (const auto& [k, v] : j.items()) {
      if (k != "counting_time_s" && k != "seed" && k != "provenance") {
        throw ValidationError(side.string() + "." + k, "unknown field");
      }
    }
    if (j.contains("counting_time_s")) {
      if (!j["counting_time_s"].is_number() || !(j["counting_time_s"].get<double>() > 0.0)) {
        throw ValidationError(side.string() + ".counting_time_s", "must be a number > 0");
      }
      t.counting_time = j["counting_time_s"].get<double>();
    }
    if (j.contains("seed")) t.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("provenance")) {
      const auto p = j["provenance"].get<std::string>();
      if (p != "synthetic" && p != "external") throw ValidationError(side.string() + ".provenance", "synthetic|external");
      t.provenance = p == "synthetic" ? Provenance::synthetic : Provenance::external;
    }
  }
  return t;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

inline json fit_to_json(const FitResult& f) {
  json p = json::object();
  for (std::size_t i = 0; i < f.parameter_names.size(); ++i) {
    p[f.parameter_names[i]] = f.parameters(static_cast<Eigen::Index>(i));
  }
  return {{"background_counts_per_s", f.background},
          {"mean_intensity_counts_per_s", f.mean_intensity},
          {"visibility", f.visibility},
          {"visibility_at_bound", f.visibility_at_bound},
          {"phase_coefficients_rad", f.phase.coefficients},
          {"drive_period", f.period()},
          {"parameter_names", f.parameter_names},
          {"parameters", p},
          {"covariance", matrix_to_json(f.covariance)},
          {"chi2", f.chi2},
          {"dof", f.dof},
          {"iterations", f.iterations},
          {"figure_of_merit_counts_per_s", figure_of_merit(f.mean_intensity, f.visibility)}};
}

}  // namespace atomint
