#include "cascade/io.hpp"

#include <cctype>
#include <cerrno>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cascade/errors.hpp"
#include "cascade/polarization.hpp"

namespace cascade {

namespace {

constexpr std::string_view kEventMagic = "# cascade-events v1";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double_or_throw(std::string_view text, const std::string& where) {
  const std::string buf(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || buf.empty() || errno == ERANGE ||
      !std::isfinite(v)) {
    throw ConfigError("cannot parse number '" + buf + "' for " + where);
  }
  return v;
}

std::int64_t parse_int_or_throw(std::string_view text,
                                const std::string& where) {
  const std::string buf(text);
  std::int64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc() || ptr != buf.data() + buf.size()) {
    throw ConfigError("cannot parse integer '" + buf + "' for " + where);
  }
  return v;
}

std::uint64_t parse_uint_or_throw(std::string_view text,
                                  const std::string& where) {
  const std::string buf(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc() || ptr != buf.data() + buf.size()) {
    throw ConfigError("cannot parse integer '" + buf + "' for " + where);
  }
  return v;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string_view pol_name_of(const PolarizationState& state) {
  for (Pol p : kNamedPols) {
    const PolarizationState named = named_state(p);
    if (std::abs(named.a_h() - state.a_h()) < 1e-12 &&
        std::abs(named.a_v() - state.a_v()) < 1e-12) {
      return to_string(p);
    }
  }
  throw std::invalid_argument(
      "event files can only record the named analyzer states");
}

void append_csv_preamble(std::string& out, std::string_view kind,
                         const std::string& hash) {
  out += "# ";
  out += kind;
  out += "\n# tool-version ";
  out += kToolVersion;
  out += "\n# config-hash ";
  out += hash;
  out += "\n";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

CascadeParams ToolConfig::params() const {
  return CascadeParams::from_delta(delta_uev, tau_x_ps, tau_xx_ps, eta,
                                   irf_fwhm_ps);
}

void ToolConfig::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string(key) + " must be positive");
    }
  };
  positive(delta_uev, "[cascade] delta_ueV");
  positive(tau_x_ps, "[cascade] tau_x_ps");
  positive(tau_xx_ps, "[cascade] tau_xx_ps");
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw ConfigError("[cascade] eta must lie in [0, 1]");
  }
  if (!(irf_fwhm_ps >= 0.0) || !std::isfinite(irf_fwhm_ps)) {
    throw ConfigError("[cascade] irf_fwhm_ps must be >= 0");
  }
  if (pulses_per_setting <= 0) {
    throw ConfigError("[run] pulses_per_setting must be positive");
  }
  positive(repetition_mhz, "[run] repetition_mhz");
  positive(bin_ps, "[analysis] bin_ps");
  positive(window_ps, "[analysis] window_ps");
  positive(dt_max_ps, "[analysis] dt_max_ps");
  if (window_ps < bin_ps) {
    throw ConfigError("[analysis] window_ps must be at least bin_ps");
  }
}

std::string format_double(double value) {
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

ToolConfig parse_config_text(const std::string& text) {
  ToolConfig config;
  std::string section;
  std::istringstream stream(text);
  std::string raw;
  while (std::getline(stream, raw)) {
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("malformed section header '" + std::string(line) +
                          "'");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "cascade" && section != "run" && section != "analysis") {
        throw ConfigError("unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("malformed line '" + std::string(line) +
                        "' in section [" + section + "]");
    }
    if (section.empty()) {
      throw ConfigError("key '" + std::string(trim(line.substr(0, eq))) +
                        "' appears before any section header");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const std::string where = "key '" + key + "' in section [" + section + "]";

    if (section == "cascade") {
      if (key == "delta_ueV") {
        config.delta_uev = parse_double_or_throw(value, where);
      } else if (key == "tau_x_ps") {
        config.tau_x_ps = parse_double_or_throw(value, where);
      } else if (key == "tau_xx_ps") {
        config.tau_xx_ps = parse_double_or_throw(value, where);
      } else if (key == "eta") {
        config.eta = parse_double_or_throw(value, where);
      } else if (key == "irf_fwhm_ps") {
        config.irf_fwhm_ps = parse_double_or_throw(value, where);
      } else {
        throw ConfigError("unknown key '" + key + "' in section [cascade]");
      }
    } else if (section == "run") {
      if (key == "pulses_per_setting") {
        config.pulses_per_setting = parse_int_or_throw(value, where);
      } else if (key == "seed") {
        config.seed = parse_uint_or_throw(value, where);
      } else if (key == "repetition_mhz") {
        config.repetition_mhz = parse_double_or_throw(value, where);
      } else {
        throw ConfigError("unknown key '" + key + "' in section [run]");
      }
    } else {
      if (key == "bin_ps") {
        config.bin_ps = parse_double_or_throw(value, where);
      } else if (key == "window_ps") {
        config.window_ps = parse_double_or_throw(value, where);
      } else if (key == "dt_max_ps") {
        config.dt_max_ps = parse_double_or_throw(value, where);
      } else {
        throw ConfigError("unknown key '" + key + "' in section [analysis]");
      }
    }
  }
  config.validate();
  return config;
}

ToolConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string canonical_config_text(const ToolConfig& config) {
  std::string out;
  out += "[cascade]\n";
  out += "delta_ueV = " + format_double(config.delta_uev) + "\n";
  out += "tau_x_ps = " + format_double(config.tau_x_ps) + "\n";
  out += "tau_xx_ps = " + format_double(config.tau_xx_ps) + "\n";
  out += "eta = " + format_double(config.eta) + "\n";
  out += "irf_fwhm_ps = " + format_double(config.irf_fwhm_ps) + "\n";
  out += "[run]\n";
  out += "pulses_per_setting = " + std::to_string(config.pulses_per_setting) +
         "\n";
  out += "seed = " + std::to_string(config.seed) + "\n";
  out += "repetition_mhz = " + format_double(config.repetition_mhz) + "\n";
  out += "[analysis]\n";
  out += "bin_ps = " + format_double(config.bin_ps) + "\n";
  out += "window_ps = " + format_double(config.window_ps) + "\n";
  out += "dt_max_ps = " + format_double(config.dt_max_ps) + "\n";
  return out;
}

std::string config_hash(const ToolConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64,
                fnv1a64(canonical_config_text(config)));
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw DataError("cannot open '" + tmp + "' for writing");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
      throw DataError("failed writing '" + tmp + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_event_file(const std::string& path, const ToolConfig& config,
                      const std::vector<ProjectionSetting>& settings,
                      std::span<const CoincidenceRecord> events) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw DataError("cannot open '" + tmp + "' for writing");
    }
    out << kEventMagic << "\n";
    out << "# tool-version " << kToolVersion << "\n";
    out << "# config-hash " << config_hash(config) << "\n";
    out << "# config-begin\n";
    std::istringstream config_lines(canonical_config_text(config));
    std::string line;
    while (std::getline(config_lines, line)) {
      out << "# " << line << "\n";
    }
    out << "# config-end\n";
    out << "# settings-begin\n";
    for (const auto& s : settings) {
      out << "# setting " << s.setting_id << " " << pol_name_of(s.p1) << " "
          << pol_name_of(s.p2) << "\n";
    }
    out << "# settings-end\n";
    out << "# columns pulse_index setting_id t1_ps t2_ps\n";

    const CoincidenceRecord* prev = nullptr;
    char buf[96];
    for (const auto& e : events) {
      if (prev && (e.setting_id < prev->setting_id ||
                   (e.setting_id == prev->setting_id &&
                    e.pulse_index <= prev->pulse_index))) {
        throw std::invalid_argument(
            "events must be strictly increasing in (setting_id, pulse_index)");
      }
      prev = &e;
      std::snprintf(buf, sizeof(buf), "%" PRId64 " %d %.6f %.6f\n",
                    static_cast<std::int64_t>(e.pulse_index), e.setting_id,
                    e.t1_ps, e.t2_ps);
      out << buf;
    }
    if (!out) {
      throw DataError("failed writing '" + tmp + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

EventFileData read_event_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open event file '" + path + "'");
  }
  EventFileData data;
  std::string line;
  long line_no = 0;
  auto fail = [&](const std::string& why) -> void {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + why);
  };

  if (!std::getline(in, line)) fail("empty file");
  ++line_no;
  if (line != kEventMagic) fail("not a cascade event file");

  std::string config_text;
  bool in_config = false;
  bool in_settings = false;
  bool saw_columns = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string_view body = trim(std::string_view(line).substr(1));
      if (body == "config-begin") {
        in_config = true;
      } else if (body == "config-end") {
        in_config = false;
      } else if (body == "settings-begin") {
        in_settings = true;
      } else if (body == "settings-end") {
        in_settings = false;
      } else if (in_config) {
        config_text += std::string(body) + "\n";
      } else if (in_settings) {
        if (body.substr(0, 8) != "setting ") fail("malformed setting line");
        std::istringstream fields{std::string(body.substr(8))};
        int id = -1;
        std::string n1;
        std::string n2;
        if (!(fields >> id >> n1 >> n2)) fail("malformed setting line");
        ProjectionSetting s;
        s.setting_id = id;
        try {
          s.p1 = named_state(n1);
          s.p2 = named_state(n2);
        } catch (const std::invalid_argument& e) {
          fail(e.what());
        }
        if (id != static_cast<int>(data.settings.size())) {
          fail("setting ids must be consecutive from 0");
        }
        data.settings.push_back(s);
      } else if (body.substr(0, 12) == "config-hash ") {
        data.hash = std::string(trim(body.substr(12)));
      } else if (body.substr(0, 8) == "columns ") {
        saw_columns = true;
      }
      // other comments (tool-version etc.) are informational
      continue;
    }

    if (!saw_columns) fail("data before the columns header");
    const char* p = line.c_str();
    char* end = nullptr;
    errno = 0;
    const long long pulse = std::strtoll(p, &end, 10);
    if (end == p) fail("malformed event line");
    p = end;
    const long setting = std::strtol(p, &end, 10);
    if (end == p) fail("malformed event line");
    p = end;
    const double t1 = std::strtod(p, &end);
    if (end == p) fail("malformed event line");
    p = end;
    const double t2 = std::strtod(p, &end);
    if (end == p || errno == ERANGE) fail("malformed event line");
    if (!trim(std::string_view(end)).empty()) {
      fail("trailing content on event line");
    }
    if (setting < 0 ||
        setting >= static_cast<long>(data.settings.size())) {
      fail("unknown setting_id " + std::to_string(setting));
    }
    if (!std::isfinite(t1) || !std::isfinite(t2)) fail("non-finite timestamp");

    CoincidenceRecord rec;
    rec.pulse_index = pulse;
    rec.setting_id = static_cast<int>(setting);
    rec.t1_ps = t1;
    rec.t2_ps = t2;
    if (!data.events.empty()) {
      const auto& prev = data.events.back();
      if (rec.setting_id < prev.setting_id ||
          (rec.setting_id == prev.setting_id &&
           rec.pulse_index <= prev.pulse_index)) {
        fail("events out of (setting_id, pulse_index) order");
      }
    }
    data.events.push_back(rec);
  }

  if (data.settings.empty()) {
    line_no = 0;
    fail("missing settings table");
  }
  try {
    data.config = parse_config_text(config_text);
  } catch (const ConfigError& e) {
    throw DataError(path + ": embedded config: " + e.what());
  }
  if (!data.hash.empty() && data.hash != config_hash(data.config)) {
    throw DataError(path + ": config hash does not match the embedded config");
  }
  return data;
}

void require_default_settings(const EventFileData& data) {
  const auto expected = default_settings();
  std::string missing;
  for (const auto& want : expected) {
    bool found = false;
    if (want.setting_id < static_cast<int>(data.settings.size())) {
      const auto& have =
          data.settings[static_cast<std::size_t>(want.setting_id)];
      found = std::abs(have.p1.a_h() - want.p1.a_h()) < 1e-12 &&
              std::abs(have.p1.a_v() - want.p1.a_v()) < 1e-12 &&
              std::abs(have.p2.a_h() - want.p2.a_h()) < 1e-12 &&
              std::abs(have.p2.a_v() - want.p2.a_v()) < 1e-12;
    }
    if (!found) {
      if (!missing.empty()) missing += ", ";
      missing += std::to_string(want.setting_id);
    }
  }
  if (!missing.empty()) {
    throw MissingSettingsError(
        "event file lacks the full 16-projection set; absent ids: " + missing);
  }
}

void write_histogram_dt_csv(const std::string& path, const HistogramDt& hist,
                            const ProjectionSetting& setting,
                            const std::string& hash) {
  std::string out;
  append_csv_preamble(out, "cascade-histogram-dt v1", hash);
  out += "# setting " + std::to_string(setting.setting_id) + " " +
         std::string(pol_name_of(setting.p1)) + " " +
         std::string(pol_name_of(setting.p2)) + "\n";
  out += "dt_ps,count\n";
  for (int k = 0; k < hist.n_bins(); ++k) {
    const auto c = hist.counts[static_cast<std::size_t>(k)];
    if (c == 0) continue;
    out += format_double(hist.bin_center(k)) + "," + std::to_string(c) + "\n";
  }
  write_text_atomic(path, out);
}

void write_histogram_2d_csv(const std::string& path, const Histogram2D& hist,
                            const ProjectionSetting& setting,
                            const std::string& hash) {
  std::string out;
  append_csv_preamble(out, "cascade-histogram-2d v1", hash);
  out += "# setting " + std::to_string(setting.setting_id) + " " +
         std::string(pol_name_of(setting.p1)) + " " +
         std::string(pol_name_of(setting.p2)) + "\n";
  out += "t1_ps,t2_ps,count\n";
  for (int i = 0; i < hist.n_bins; ++i) {
    for (int j = 0; j < hist.n_bins; ++j) {
      const auto c = hist.at(i, j);
      if (c == 0) continue;
      out += format_double((i + 0.5) * hist.bin_ps) + "," +
             format_double((j + 0.5) * hist.bin_ps) + "," +
             std::to_string(c) + "\n";
    }
  }
  write_text_atomic(path, out);
}

void write_matrix_series_csv(const std::string& path,
                             std::span<const WindowReconstruction> series,
                             const std::string& hash) {
  std::string out;
  append_csv_preamble(out, "cascade-matrix-series v1", hash);
  out += "t_start_ps,t_end_ps";
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      out += ",re_" + std::to_string(i) + std::to_string(j);
    }
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      out += ",im_" + std::to_string(i) + std::to_string(j);
    }
  }
  out += ",negativity,negativity_sigma,low_stats\n";
  for (const auto& w : series) {
    out += format_double(w.t_start_ps) + "," + format_double(w.t_end_ps);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        out += "," + format_double(w.recon.rho(i, j).real());
      }
    }
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        out += "," + format_double(w.recon.rho(i, j).imag());
      }
    }
    out += "," + format_double(w.negativity) + "," +
           format_double(w.negativity_sigma) + "," +
           (w.low_stats ? "1" : "0") + "\n";
  }
  write_text_atomic(path, out);
}

std::vector<MatrixSeriesRow> read_matrix_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open matrix series file '" + path + "'");
  }
  std::vector<MatrixSeriesRow> rows;
  std::string line;
  bool saw_header = false;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      saw_header = true;  // column header row
      continue;
    }
    const auto fields = split_csv(line);
    if (fields.size() != 37) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 37 fields");
    }
    auto num = [&](std::size_t k) {
      char* end = nullptr;
      const double v = std::strtod(fields[k].c_str(), &end);
      if (end != fields[k].c_str() + fields[k].size()) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": bad number '" + fields[k] + "'");
      }
      return v;
    };
    MatrixSeriesRow row;
    row.t_start_ps = num(0);
    row.t_end_ps = num(1);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        row.rho(i, j) = Complex(num(2 + static_cast<std::size_t>(4 * i + j)),
                                num(18 + static_cast<std::size_t>(4 * i + j)));
      }
    }
    row.negativity = num(34);
    row.negativity_sigma = num(35);
    row.low_stats = fields[36] == "1";

    const double herm = (row.rho - row.rho.adjoint()).cwiseAbs().maxCoeff();
    const double trace_err = std::abs(row.rho.trace() - Complex(1.0, 0.0));
    if (herm > 1e-9 || trace_err > 1e-9) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": matrix fails Hermiticity/trace validation");
    }
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(const std::string& path,
                     std::span<const SweepPoint> points,
                     const std::string& hash) {
  std::string out;
  append_csv_preamble(out, "cascade-negativity-sweep v1", hash);
  out += "delta_t_ps,n_data,n_sigma,n_ideal,n_irf_model,low_stats\n";
  for (const auto& p : points) {
    out += format_double(p.delta_t_ps) + "," + format_double(p.n_data) + "," +
           format_double(p.n_sigma) + "," + format_double(p.n_ideal) + "," +
           format_double(p.n_irf_model) + "," + (p.low_stats ? "1" : "0") +
           "\n";
  }
  write_text_atomic(path, out);
}

void write_fit_report(const std::string& path, const FitResult& fit,
                      const std::string& hash) {
  std::string out;
  append_csv_preamble(out, "cascade-fit-report v1", hash);
  out += "tau_r_ps = " + format_double(fit.tau_r_ps) + "\n";
  out += "tau_r_sigma_ps = " + format_double(fit.tau_r_sigma_ps) + "\n";
  out += "scale = " + format_double(fit.scale) + "\n";
  out += "chi2_per_dof = " + format_double(fit.chi2_per_dof) + "\n";
  out += "deviance = " + format_double(fit.deviance) + "\n";
  out += "converged = " + std::string(fit.converged ? "1" : "0") + "\n";
  out += "# precession period fixed by the measured splitting, not fitted\n";
  out += "precession_ps = " + format_double(fit.precession_ps) + "\n";
  out += "# response width fixed by its own calibration, not fitted\n";
  out += "irf_fwhm_ps = " + format_double(fit.irf_fwhm_ps) + "\n";
  if (fit.coarse_grid_warning) {
    out += "# warning: histogram bin wider than half the response sigma\n";
  }
  write_text_atomic(path, out);
}

void write_fit_curves_csv(const std::string& path, const FitResult& fit,
                          const std::string& hash) {
  std::string out;
  append_csv_preamble(out, "cascade-fit-curves v1", hash);
  out += "dt_ps";
  for (int v = 0; v < 16; ++v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), ",model_s%02d", v);
    out += buf;
  }
  out += "\n";
  const std::size_t n_bins =
      fit.model_counts.empty() ? 0 : fit.model_counts[0].size();
  for (std::size_t k = 0; k < n_bins; ++k) {
    out += format_double(fit.t0_ps + (static_cast<double>(k) + 0.5) *
                                         fit.bin_ps);
    for (int v = 0; v < 16; ++v) {
      out += "," + format_double(fit.model_counts[static_cast<std::size_t>(v)][k]);
    }
    out += "\n";
  }
  write_text_atomic(path, out);
}

}  // namespace cascade
