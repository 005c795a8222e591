#include "heartflow/io/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace heartflow::io {

namespace {

namespace fs = std::filesystem;
using heartnet::Chamber;

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  const auto s = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
    throw std::invalid_argument("'" + text + "' is not a finite number");
  return v;
}

template <class Int>
Int parse_int(const std::string& text) {
  const auto s = trim(text);
  Int v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size())
    throw std::invalid_argument("'" + text + "' is not an integer");
  return v;
}

bool parse_bool(const std::string& text) {
  const auto s = lower(trim(text));
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw std::invalid_argument("'" + text + "' is not a boolean");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep))
    if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

std::vector<double> parse_numbers(const std::string& text, std::size_t n) {
  std::vector<double> v;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) v.push_back(parse_double(tok));
  if (v.size() != n) throw std::invalid_argument("expected " + std::to_string(n) + " numbers, got '" + text + "'");
  return v;
}

struct Field {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;  // empty string: key omitted from output
};

Field num(const std::string& key, double& ref) {
  return {key, [&ref](const std::string& s) { ref = parse_double(s); }, [&ref] { return fmt(ref); }};
}

Field integer(const std::string& key, int& ref) {
  return {key, [&ref](const std::string& s) { ref = parse_int<int>(s); },
          [&ref] { return std::to_string(ref); }};
}

Field boolean(const std::string& key, bool& ref) {
  return {key, [&ref](const std::string& s) { ref = parse_bool(s); },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

Field text(const std::string& key, std::string& ref) {
  return {key, [&ref](const std::string& s) { ref = trim(s); }, [&ref] { return ref; }};
}

/// File name resolved against the config directory unless it is one of the
/// given keywords.
Field path(const std::string& key, std::string& ref, const std::string& base,
           std::vector<std::string> keywords = {}) {
  return {key,
          [&ref, base, keywords](const std::string& s) {
            const auto t = trim(s);
            if (t.empty() || std::find(keywords.begin(), keywords.end(), lower(t)) != keywords.end()) {
              ref = lower(t);
              return;
            }
            fs::path p(t);
            ref = (p.is_absolute() ? p : fs::absolute(fs::path(base) / p)).lexically_normal().string();
          },
          [&ref] { return ref; }};
}

Field vec3(const std::string& key, geometry::Vec3& ref) {
  return {key,
          [&ref](const std::string& s) {
            const auto v = parse_numbers(s, 3);
            ref = {v[0], v[1], v[2]};
          },
          [&ref] { return fmt(ref.x()) + " " + fmt(ref.y()) + " " + fmt(ref.z()); }};
}

struct SectionFields {
  std::vector<Field> fields;
  const Field* find(const std::string& key) const {
    for (const auto& f : fields)
      if (f.key == key) return &f;
    return nullptr;
  }
};

SectionFields scenario_fields(ScenarioConfig& c) {
  auto& s = c.scenario;
  return {{text("topology", c.topology),
           num("period", s.period),
           num("dt", s.dt),
           integer("cycles", s.cycles),
           boolean("clamp", s.net.isovolumetric_clamp),
           num("clamp_catchup_limit", s.net.clamp_catchup_limit),
           num("backflow_threshold", s.net.backflow_threshold),
           integer("backflow_debounce", s.net.backflow_debounce),
           {"seed", [&c](const std::string& v) { c.seed = parse_int<std::uint64_t>(v); },
            [&c] { return std::to_string(c.seed); }},
           text("out", c.output_dir),
           boolean("plots", c.plots)}};
}

SectionFields lpn_fields(circuit::LpnParameters& p) {
  return {{num("r_ar_sys", p.r_ar_sys), num("r_ven_sys", p.r_ven_sys), num("r_ar_pul", p.r_ar_pul),
           num("r_ven_pul", p.r_ven_pul), num("c_ar_sys", p.c_ar_sys), num("c_ven_sys", p.c_ven_sys),
           num("c_ar_pul", p.c_ar_pul), num("c_ven_pul", p.c_ven_pul), num("l_ar_sys", p.l_ar_sys),
           num("l_ven_sys", p.l_ven_sys), num("l_ar_pul", p.l_ar_pul), num("l_ven_pul", p.l_ven_pul),
           num("r_min", p.r_min)}};
}

SectionFields initial_fields(circuit::LpnState& s) {
  SectionFields out;
  for (int i = 0; i < circuit::LpnState::kSize; ++i) out.fields.push_back(num(circuit::LpnState::name(i), s[i]));
  return out;
}

SectionFields ventricle_fields(heartnet::VentricleSpec& v, std::string& file, const std::string& base) {
  return {{num("edv", v.edv), num("esv", v.esv), num("a_start", v.a_start), num("a_end", v.a_end),
           num("ejection_start", v.ejection_start), num("ejection_end", v.ejection_end),
           num("filling_start", v.filling_start), num("e_delay", v.e_delay), num("e_duration", v.e_duration),
           num("e_fraction", v.e_fraction), num("a_fraction", v.a_fraction), path("waveform", file, base)}};
}

SectionFields atrium_fields(heartnet::AtriumSpec& a, std::string& file, const std::string& base) {
  return {{num("min_volume", a.min_volume), num("a_reversal", a.a_reversal), path("waveform", file, base)}};
}

SectionFields valve_fields(heartnet::ValveModel& v) {
  return {{{"state", [&v](const std::string& s) { v.state = heartnet::valve_state_from_string(trim(s)); },
            [&v] { return lower(heartnet::to_string(v.state)); }},
           num("r_open", v.r_open),
           num("r_closed", v.r_closed),
           num("transition_duration", v.transition_duration)}};
}

SectionFields shunt_fields(heartnet::Shunt& s) {
  auto chamber = [](const std::string& key, Chamber& ref) {
    return Field{key, [&ref](const std::string& v) { ref = heartnet::chamber_from_string(trim(v)); },
                 [&ref] { return std::string(heartnet::to_string(ref)); }};
  };
  return {{chamber("a", s.a), chamber("b", s.b), num("resistance", s.resistance)}};
}

SectionFields calibrate_fields(CalibrateSection& c) {
  auto& o = c.options;
  return {{{"free", [&c](const std::string& v) { c.free_parameters = split(v, ','); },
            [&c] { return join(c.free_parameters, ", "); }},
           integer("cycles", o.cycles),
           num("dt", o.dt),
           integer("max_evaluations", o.search.max_evaluations),
           num("tolerance", o.search.tolerance),
           num("initial_step", o.search.initial_step),
           num("min_step", o.search.min_step)}};
}

SectionFields target_fields(heartnet::PressureTarget& t) {
  return {{{"site", [&t](const std::string& v) { t.site = heartnet::site_from_string(trim(v)); },
            [&t] { return lower(heartnet::to_string(t.site)); }},
           {"statistic", [&t](const std::string& v) { t.statistic = heartnet::statistic_from_string(trim(v)); },
            [&t] { return std::string(heartnet::to_string(t.statistic)); }},
           num("value", t.value),
           num("weight", t.weight)}};
}

SectionFields register_fields(RegisterSection& r, const std::string& base) {
  auto& o = r.options;
  return {{path("baseline", r.baseline, base, {"sphere"}),
           num("radius", r.radius),
           integer("subdivisions", r.subdivisions),
           {"targets",
            [&r, base](const std::string& v) {
              if (lower(trim(v)) == "translate") {
                r.targets = "translate";
                return;
              }
              std::vector<std::string> files;
              for (const auto& f : split(v, ',')) {
                std::string resolved;
                path("", resolved, base).set(f);
                files.push_back(resolved);
              }
              r.targets = join(files, ", ");
            },
            [&r] { return r.targets; }},
           vec3("offset", r.offset),
           integer("frames", r.frames),
           integer("max_iterations", o.max_iterations),
           num("learning_rate", o.learning_rate),
           num("beta1", o.beta1),
           num("beta2", o.beta2),
           num("adam_epsilon", o.adam_epsilon),
           num("chamfer_tolerance", o.chamfer_tolerance),
           integer("width", o.width),
           num("w_point", r.weights.point),
           num("w_normal", r.weights.normal),
           num("w_arap", r.weights.arap),
           integer("weight_samples", r.weight_samples),
           integer("search_iterations", r.search_iterations)}};
}

SectionFields sdf_fields(SdfSection& s, const std::string& base) {
  return {{path("mesh", s.mesh, base, {"sphere", "box"}),
           num("radius", s.radius),
           integer("subdivisions", s.subdivisions),
           vec3("lo", s.lo),
           vec3("hi", s.hi),
           {"samples",
            [&s](const std::string& v) {
              const auto n = parse_numbers(v, 3);
              for (int i = 0; i < 3; ++i) {
                if (n[i] != std::floor(n[i])) throw std::invalid_argument("samples must be integers");
                s.samples[i] = static_cast<int>(n[i]);
              }
            },
            [&s] {
              return std::to_string(s.samples[0]) + " " + std::to_string(s.samples[1]) + " " +
                     std::to_string(s.samples[2]);
            }},
           num("epsilon", s.epsilon),
           text("valve_state", s.valve_state)}};
}

SectionFields energetics_fields(EnergeticsSection& e, const std::string& base) {
  return {{path("field", e.field, base, {"synthetic"}), path("mask", e.mask, base), num("rho", e.rho),
           num("mu", e.mu), integer("synthetic_steps", e.synthetic_steps),
           num("synthetic_shear", e.synthetic_shear)}};
}

SectionFields contact_fields(ContactSection& c) {
  return {{num("k", c.penalty.k), num("h", c.penalty.h), integer("pairs", c.pairs)}};
}

constexpr std::array<Chamber, 4> kChambers = {Chamber::LA, Chamber::LV, Chamber::RA, Chamber::RV};

/// Fields of a fixed (non-indexed) section, or nullopt if the name is not one.
std::optional<SectionFields> fixed_section(const std::string& name, ScenarioConfig& c, const std::string& base) {
  auto& s = c.scenario;
  if (name == "scenario") return scenario_fields(c);
  if (name == "lpn") return lpn_fields(s.lpn);
  if (name == "initial") return initial_fields(s.initial);
  if (name == "lv") return ventricle_fields(s.lv, c.waveform_files[static_cast<int>(Chamber::LV)], base);
  if (name == "rv") return ventricle_fields(s.rv, c.waveform_files[static_cast<int>(Chamber::RV)], base);
  if (name == "la") return atrium_fields(s.la, c.waveform_files[static_cast<int>(Chamber::LA)], base);
  if (name == "ra") return atrium_fields(s.ra, c.waveform_files[static_cast<int>(Chamber::RA)], base);
  if (name.rfind("valve.", 0) == 0) {
    for (int v = 0; v < heartnet::kValveCount; ++v)
      if (name.substr(6) == lower(heartnet::to_string(static_cast<heartnet::ValveId>(v))))
        return valve_fields(s.net.valves[v]);
    return std::nullopt;
  }
  if (name == "calibrate") return calibrate_fields(c.calibrate);
  if (name == "register") return register_fields(c.registration, base);
  if (name == "sdf") return sdf_fields(c.sdf, base);
  if (name == "energetics") return energetics_fields(c.energetics, base);
  if (name == "contact") return contact_fields(c.contact);
  return std::nullopt;
}

void apply_section(const std::string& section, const boost::property_tree::ptree& keys, const SectionFields& f,
                   std::vector<std::string>& errors) {
  for (const auto& [key, value] : keys) {
    const auto* field = f.find(key);
    if (!field) {
      errors.push_back("[" + section + "] unknown key '" + key + "'");
      continue;
    }
    try {
      field->set(value.data());
    } catch (const std::exception& e) {
      errors.push_back("[" + section + "] " + key + ": " + e.what());
    }
  }
}

void collect(std::vector<std::string>& errors, const std::string& where, const std::function<void()>& check) {
  try {
    check();
  } catch (const std::exception& e) {
    errors.push_back(where + ": " + e.what());
  }
}

std::vector<std::string> rule_violations(const ScenarioConfig& c) {
  std::vector<std::string> e;
  const auto& s = c.scenario;
  if (c.topology != "healthy" && c.topology != "chd")
    e.push_back("[scenario] topology must be healthy or chd, got '" + c.topology + "'");
  if (!(s.period > 0.0)) e.push_back("[scenario] period must be > 0");
  if (!(s.dt > 0.0)) e.push_back("[scenario] dt must be > 0");
  if (s.period > 0.0 && s.dt > s.period / 500.0 * (1.0 + 1e-12))
    e.push_back("[scenario] dt " + fmt(s.dt) + " exceeds period/500 = " + fmt(s.period / 500.0));
  if (s.cycles < 1) e.push_back("[scenario] cycles must be >= 1");
  if (c.output_dir.empty()) e.push_back("[scenario] out must not be empty");
  if (c.topology == "healthy" && !s.net.shunts.empty())
    e.push_back("[scenario] topology healthy does not allow shunts");
  if (c.topology == "chd" && s.net.shunts.empty()) e.push_back("[scenario] topology chd needs at least one shunt");
  std::set<std::string> shunt_names;
  for (const auto& sh : s.net.shunts)
    if (!shunt_names.insert(lower(sh.name)).second) e.push_back("duplicate shunt '" + sh.name + "'");

  collect(e, "[lpn]", [&] { s.lpn.validate(); });
  for (int i = 0; i < circuit::LpnState::kSize; ++i)
    if (!std::isfinite(s.initial[i])) e.push_back(std::string("[initial] ") + circuit::LpnState::name(i) + " not finite");
  collect(e, "network", [&] { s.net.validate(); });
  bool have_waveforms = true;
  for (const auto& w : s.net.waveforms) have_waveforms = have_waveforms && !w.empty();
  if (have_waveforms && s.period > 0.0 && std::abs(s.net.period() - s.period) > 1e-9 * s.period)
    e.push_back("waveform period " + fmt(s.net.period()) + " differs from [scenario] period " + fmt(s.period));

  const auto& cal = c.calibrate;
  if (cal.options.cycles < 1) e.push_back("[calibrate] cycles must be >= 1");
  if (cal.options.dt < 0.0) e.push_back("[calibrate] dt must be >= 0");
  if (cal.options.search.max_evaluations < 1) e.push_back("[calibrate] max_evaluations must be >= 1");
  if (!(cal.options.search.initial_step > 0.0) || !(cal.options.search.min_step > 0.0))
    e.push_back("[calibrate] initial_step and min_step must be > 0");
  for (const auto& name : cal.free_parameters) {
    auto p = s.lpn;
    auto n = s.net;
    collect(e, "[calibrate] free", [&] { (void)heartnet::parameter_ref(name, p, n); });
  }
  for (std::size_t i = 0; i < cal.targets.size(); ++i) {
    const auto& t = cal.targets[i];
    if (t.value == 0.0) e.push_back("[target." + cal.target_names[i] + "] value must be non-zero");
    if (!(t.weight >= 0.0)) e.push_back("[target." + cal.target_names[i] + "] weight must be >= 0");
  }

  const auto& r = c.registration;
  if (!(r.radius > 0.0)) e.push_back("[register] radius must be > 0");
  if (r.subdivisions < 0 || r.subdivisions > 6) e.push_back("[register] subdivisions must be in [0, 6]");
  if (r.frames < 1) e.push_back("[register] frames must be >= 1");
  if (r.targets.empty()) e.push_back("[register] targets must not be empty");
  if (r.options.max_iterations < 0) e.push_back("[register] max_iterations must be >= 0");
  if (!(r.options.learning_rate > 0.0)) e.push_back("[register] learning_rate must be > 0");
  if (r.options.width < 1) e.push_back("[register] width must be >= 1");
  if (r.weight_samples < 0) e.push_back("[register] weight_samples must be >= 0");
  if (r.search_iterations < 1) e.push_back("[register] search_iterations must be >= 1");
  collect(e, "[register] weights", [&] { r.weights.validate(); });

  const auto& d = c.sdf;
  if (!(d.radius > 0.0)) e.push_back("[sdf] radius must be > 0");
  if (d.subdivisions < 0 || d.subdivisions > 7) e.push_back("[sdf] subdivisions must be in [0, 7]");
  if (!(d.hi.array() > d.lo.array()).all()) e.push_back("[sdf] hi must exceed lo on every axis");
  for (int n : d.samples)
    if (n < 1) e.push_back("[sdf] samples must be >= 1");
  if (!(d.epsilon > 0.0)) e.push_back("[sdf] epsilon must be > 0");

  const auto& en = c.energetics;
  if (!(en.rho > 0.0)) e.push_back("[energetics] rho must be > 0");
  if (!(en.mu > 0.0)) e.push_back("[energetics] mu must be > 0");
  if (en.synthetic_steps < 1) e.push_back("[energetics] synthetic_steps must be >= 1");

  collect(e, "[contact]", [&] { c.contact.penalty.validate(); });
  if (c.contact.pairs < 1) e.push_back("[contact] pairs must be >= 1");
  return e;
}

void emit(std::ostringstream& out, const std::string& section, const SectionFields& f) {
  out << "[" << section << "]\n";
  for (const auto& field : f.fields) {
    const auto v = field.get();
    if (!v.empty()) out << field.key << " = " << v << "\n";
  }
  out << "\n";
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error("invalid configuration:\n  " + join(violations, "\n  ")),
      violations_(std::move(violations)) {}

void ScenarioConfig::build_waveforms() {
  scenario.synthesize_waveforms();
  for (Chamber ch : kChambers) {
    const auto& file = waveform_files[static_cast<int>(ch)];
    if (!file.empty()) scenario.net.waveform(ch) = heartnet::load_waveform_csv(ch, file);
  }
}

void ScenarioConfig::validate() const {
  auto e = rule_violations(*this);
  if (!e.empty()) throw ConfigError(std::move(e));
}

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({e.message() + " (line " + std::to_string(e.line()) + ")"});
  }

  std::vector<std::string> errors;
  ScenarioConfig c;
  if (const auto sc = tree.get_child_optional("scenario"))
    if (const auto topo = sc->get_optional<std::string>("topology")) c.topology = lower(trim(*topo));
  try {
    c.scenario = heartnet::preset_by_name(c.topology);
  } catch (const std::exception&) {
    c.scenario = heartnet::healthy_preset();  // the topology error is reported below
  }

  bool shunts_listed = false;
  for (const auto& [raw_name, keys] : tree) {
    const auto name = lower(raw_name);
    if (!keys.data().empty()) {
      errors.push_back("key '" + raw_name + "' outside any section");
      continue;
    }
    if (name.rfind("shunt.", 0) == 0 && name.size() > 6) {
      if (!shunts_listed) c.scenario.net.shunts.clear();
      shunts_listed = true;
      auto upper = name.substr(6);
      for (char& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      c.scenario.net.shunts.push_back({upper, Chamber::LA, Chamber::RA, 0.005});
      apply_section(name, keys, shunt_fields(c.scenario.net.shunts.back()), errors);
      continue;
    }
    if (name.rfind("target.", 0) == 0 && name.size() > 7) {
      c.calibrate.targets.push_back({});
      c.calibrate.target_names.push_back(name.substr(7));
      apply_section(name, keys, target_fields(c.calibrate.targets.back()), errors);
      continue;
    }
    const auto fields = fixed_section(name, c, base_dir);
    if (!fields) {
      errors.push_back("unknown section [" + raw_name + "]");
      continue;
    }
    apply_section(name, keys, *fields, errors);
  }

  try {
    c.build_waveforms();
  } catch (const std::exception& e) {
    errors.push_back(std::string("waveforms: ") + e.what());
  }
  for (auto& v : rule_violations(c))
    if (std::find(errors.begin(), errors.end(), v) == errors.end()) errors.push_back(std::move(v));
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

ScenarioConfig load_config(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config file " + file});
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto dir = fs::path(file).parent_path();
  return parse_config(buf.str(), dir.empty() ? "." : dir.string());
}

std::string to_ini(const ScenarioConfig& config) {
  // Field accessors take non-const references; they are only read here.
  auto& c = const_cast<ScenarioConfig&>(config);
  auto& s = c.scenario;
  const std::string base = ".";
  std::ostringstream out;
  emit(out, "scenario", scenario_fields(c));
  emit(out, "lpn", lpn_fields(s.lpn));
  emit(out, "initial", initial_fields(s.initial));
  for (const char* ch : {"lv", "rv", "la", "ra"}) emit(out, ch, *fixed_section(ch, c, base));
  for (int v = 0; v < heartnet::kValveCount; ++v)
    emit(out, "valve." + lower(heartnet::to_string(static_cast<heartnet::ValveId>(v))), valve_fields(s.net.valves[v]));
  for (auto& sh : s.net.shunts) emit(out, "shunt." + lower(sh.name), shunt_fields(sh));
  emit(out, "calibrate", calibrate_fields(c.calibrate));
  for (std::size_t i = 0; i < c.calibrate.targets.size(); ++i)
    emit(out, "target." + c.calibrate.target_names[i], target_fields(c.calibrate.targets[i]));
  emit(out, "register", register_fields(c.registration, base));
  emit(out, "sdf", sdf_fields(c.sdf, base));
  emit(out, "energetics", energetics_fields(c.energetics, base));
  emit(out, "contact", contact_fields(c.contact));
  auto text = out.str();
  text.pop_back();  // single trailing newline
  return text;
}

}  // namespace heartflow::io
