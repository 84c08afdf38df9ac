#include "volterra/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "volterra/errors.hpp"
#include "volterra/text.hpp"

namespace volterra {

const ConfigEntry* ConfigSection::find(std::string_view key) const {
  for (const auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

void ConfigSection::set(const std::string& key, const std::string& value) {
  for (auto& e : entries) {
    if (e.key == key) {
      e.value = value;
      return;
    }
  }
  entries.push_back({key, value, 0, 0, 0});
}

const ConfigSection* ConfigDocument::find(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ConfigSection& ConfigDocument::section(const std::string& name) {
  for (auto& s : sections) {
    if (s.name == name) return s;
  }
  sections.push_back({name, 0, {}});
  return sections.back();
}

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

ConfigDocument parse_config_document(std::string_view text) {
  ConfigDocument doc;
  ConfigSection* current = nullptr;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    auto col = [&](std::size_t pos) { return static_cast<int>(pos) + 1; };
    if (i == line.size() || line[i] == '#' || line[i] == ';') continue;

    if (line[i] == '[') {
      const std::size_t start = ++i;
      while (i < line.size() && is_ident(line[i])) ++i;
      if (i == start) throw ConfigError("expected section name", line_no, col(i));
      const std::string name(line.substr(start, i - start));
      if (i == line.size() || line[i] != ']') throw ConfigError("expected ']'", line_no, col(i));
      ++i;
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i != line.size()) throw ConfigError("unexpected text after section header", line_no, col(i));
      if (doc.find(name)) throw ConfigError("duplicate section [" + name + "]", line_no, col(start - 1));
      doc.sections.push_back({name, line_no, {}});
      current = &doc.sections.back();
      continue;
    }

    if (!is_ident_start(line[i])) throw ConfigError("expected key or section", line_no, col(i));
    const std::size_t key_start = i;
    while (i < line.size() && is_ident(line[i])) ++i;
    const std::string key(line.substr(key_start, i - key_start));
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i == line.size() || line[i] != '=') throw ConfigError("expected '='", line_no, col(i));
    ++i;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::string value(trim(line.substr(i)));
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", line_no, col(i));
    if (!current) throw ConfigError("key outside of a section", line_no, col(key_start));
    if (current->find(key)) {
      throw ConfigError("duplicate key '" + key + "'", line_no, col(key_start));
    }
    current->entries.push_back({key, value, line_no, col(i), col(key_start)});
  }
  return doc;
}

std::string serialize_config(const ConfigDocument& doc) {
  std::string out;
  for (std::size_t s = 0; s < doc.sections.size(); ++s) {
    if (s > 0) out += '\n';
    out += "[" + doc.sections[s].name + "]\n";
    for (const auto& e : doc.sections[s].entries) out += e.key + " = " + e.value + "\n";
  }
  return out;
}

namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"kernel", {"family", "H", "tau", "scale", "nodes", "weights"}},
      {"kernel_bar", {"family", "H", "tau", "scale", "nodes", "weights"}},
      {"rule", {"H", "cells", "points_per_cell", "cut_low", "cut_high", "lump_low_tail"}},
      {"model", {"variant", "nu", "H", "rho", "X0", "scale", "b", "sigma", "T", "steps"}},
      {"grid", {"T", "steps"}},
      {"mc", {"N", "seed", "batches", "phi", "mode"}},
      {"sweep", {"parameter", "values"}},
      {"output", {"dir", "dump_paths"}},
  };
  return keys;
}

// Runs `parse` on an entry's value, attaching the entry's position to errors.
template <class F>
auto at(const ConfigEntry& e, F parse) {
  try {
    return parse(e.value);
  } catch (const ConfigError& err) {
    if (err.line() > 0) throw;
    throw ConfigError(err.what(), e.line, e.column);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what(), e.line, e.column);
  }
}

double as_double(const std::string& v) { return parse_double(v); }

int as_int(const std::string& v) {
  const long long x = parse_i64(v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError("integer out of range '" + v + "'");
  }
  return static_cast<int>(x);
}

bool as_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

Kernel kernel_section(const ConfigSection& s) {
  std::map<std::string, std::string> block;
  for (const auto& e : s.entries) block[e.key] = e.value;
  try {
    return kernel_from_config(block);
  } catch (const ConfigError& err) {
    // Point at the offending entry when the message quotes its key or value.
    const std::string what = err.what();
    for (const auto& e : s.entries) {
      if (what.find("'" + e.value + "'") != std::string::npos) {
        throw ConfigError(what, e.line, e.column);
      }
      if (what.find("'" + e.key + "'") != std::string::npos) {
        throw ConfigError(what, e.line, e.key_column);
      }
    }
    throw ConfigError(std::string(err.what()) + " in [" + s.name + "]", s.line, 1);
  }
}

}  // namespace

RunConfig RunConfig::from_document(const ConfigDocument& doc) {
  const auto& allowed = allowed_keys();
  for (const auto& s : doc.sections) {
    auto it = allowed.find(s.name);
    if (it == allowed.end()) throw ConfigError("unknown section [" + s.name + "]", s.line, 1);
    for (const auto& e : s.entries) {
      if (!it->second.count(e.key)) {
        throw ConfigError("unknown key '" + e.key + "' in [" + s.name + "]", e.line,
                          e.key_column);
      }
    }
  }

  RunConfig cfg;
  if (const auto* s = doc.find("kernel")) cfg.kernel = kernel_section(*s);
  if (const auto* s = doc.find("kernel_bar")) cfg.kernel_bar = kernel_section(*s);

  if (const auto* s = doc.find("grid")) {
    if (const auto* e = s->find("T")) cfg.grid.T = at(*e, as_double);
    if (const auto* e = s->find("steps")) cfg.grid.steps = at(*e, as_int);
  }

  if (const auto* s = doc.find("model")) {
    ModelConfig m;
    if (const auto* e = s->find("variant")) m.variant = at(*e, [](const std::string& v) { return model_variant_from_string(v); });
    if (const auto* e = s->find("nu")) m.nu = at(*e, as_double);
    if (const auto* e = s->find("H")) m.H = at(*e, as_double);
    if (const auto* e = s->find("rho")) m.rho = at(*e, as_double);
    if (const auto* e = s->find("X0")) m.X0 = at(*e, as_double);
    if (const auto* e = s->find("scale")) m.scale = at(*e, as_double);
    if (const auto* e = s->find("b")) m.b = e->value;
    if (const auto* e = s->find("sigma")) m.sigma = e->value;
    const bool has_grid = doc.find("grid") != nullptr;
    if (const auto* e = s->find("T")) {
      const double T = at(*e, as_double);
      if (has_grid && T != cfg.grid.T) throw ConfigError("model T differs from [grid] T", e->line, e->column);
      cfg.grid.T = T;
    }
    if (const auto* e = s->find("steps")) {
      const int n = at(*e, as_int);
      if (has_grid && n != cfg.grid.steps) throw ConfigError("model steps differ from [grid] steps", e->line, e->column);
      cfg.grid.steps = n;
    }
    if (m.variant == ModelVariant::Custom) {
      for (const char* key : {"b", "sigma"}) {
        const auto* e = s->find(key);
        if (!e) throw ConfigError(std::string("custom model needs '") + key + "'", s->line, 1);
        try {
          Expression::parse(e->value);
        } catch (const ExpressionError& err) {
          throw ConfigError(err.what(), e->line, e->column + err.position() - 1);
        }
      }
    }
    if (!(m.rho >= 0.0 && m.rho <= 1.0)) {
      throw ConfigError("rho must lie in [0, 1]", s->find("rho")->line, s->find("rho")->column);
    }
    cfg.model = m;
  }
  if (!(cfg.grid.T > 0.0)) throw ConfigError("grid T must be positive");
  if (cfg.grid.steps < 1) throw ConfigError("grid steps must be >= 1");

  if (const auto* s = doc.find("rule")) {
    RuleConfig r;
    if (const auto* e = s->find("H")) r.H = at(*e, as_double);
    if (const auto* e = s->find("cells")) r.cells = at(*e, as_int);
    if (const auto* e = s->find("points_per_cell")) r.points_per_cell = at(*e, as_int);
    if (const auto* e = s->find("cut_low")) r.cut_low = at(*e, as_double);
    if (const auto* e = s->find("cut_high")) r.cut_high = at(*e, as_double);
    if (const auto* e = s->find("lump_low_tail")) r.lump_low_tail = at(*e, as_bool);
    cfg.rule = r;
  }

  if (const auto* s = doc.find("mc")) {
    if (const auto* e = s->find("N")) cfg.mc.N = at(*e, [](const std::string& v) { return parse_i64(v); });
    if (const auto* e = s->find("seed")) cfg.mc.seed = at(*e, [](const std::string& v) { return parse_u64(v); });
    if (const auto* e = s->find("batches")) cfg.mc.batches = at(*e, as_int);
    if (const auto* e = s->find("phi")) {
      cfg.mc.phi = e->value;
      try {
        TestFunction::from_string(e->value);
      } catch (const ExpressionError& err) {
        throw ConfigError(err.what(), e->line, e->column + err.position() - 1);
      }
    }
    if (const auto* e = s->find("mode")) {
      cfg.mc.independent = at(*e, [](const std::string& v) {
        if (v == "coupled") return false;
        if (v == "independent") return true;
        throw ConfigError("mode must be coupled or independent");
      });
    }
    if (cfg.mc.N < 2) throw ConfigError("mc N must be >= 2", s->find("N")->line, s->find("N")->column);
    if (cfg.mc.batches < 1) throw ConfigError("mc batches must be >= 1", s->line, 1);
  }

  if (const auto* s = doc.find("sweep")) {
    SweepConfig w;
    if (const auto* e = s->find("parameter")) {
      w.parameter = e->value;
      if (w.parameter != "tau" && w.parameter != "cells") {
        throw ConfigError("sweep parameter must be tau or cells", e->line, e->column);
      }
    }
    const auto* e = s->find("values");
    if (!e) throw ConfigError("[sweep] needs 'values'", s->line, 1);
    w.values = at(*e, [](const std::string& v) { return parse_list(v); });
    if (w.values.empty()) throw ConfigError("empty sweep", e->line, e->column);
    cfg.sweep = w;
  }

  if (const auto* s = doc.find("output")) {
    if (const auto* e = s->find("dir")) cfg.output.dir = e->value;
    if (const auto* e = s->find("dump_paths")) cfg.output.dump_paths = at(*e, as_int);
  }
  return cfg;
}

ConfigDocument RunConfig::to_document() const {
  ConfigDocument doc;
  auto put_kernel = [&](const std::string& name, const Kernel& k) {
    auto& s = doc.section(name);
    for (const auto& [key, value] : to_config(k)) s.set(key, value);
  };
  if (kernel) put_kernel("kernel", *kernel);
  if (kernel_bar) put_kernel("kernel_bar", *kernel_bar);
  if (rule) {
    auto& s = doc.section("rule");
    if (rule->H) s.set("H", format_double(*rule->H));
    s.set("cells", std::to_string(rule->cells));
    s.set("points_per_cell", std::to_string(rule->points_per_cell));
    if (rule->cut_low) s.set("cut_low", format_double(*rule->cut_low));
    if (rule->cut_high) s.set("cut_high", format_double(*rule->cut_high));
    s.set("lump_low_tail", rule->lump_low_tail ? "true" : "false");
  }
  if (model) {
    auto& s = doc.section("model");
    s.set("variant", std::string(to_string(model->variant)));
    s.set("nu", format_double(model->nu));
    s.set("H", format_double(model->H));
    s.set("rho", format_double(model->rho));
    s.set("X0", format_double(model->X0));
    if (model->scale) s.set("scale", format_double(*model->scale));
    if (!model->b.empty()) s.set("b", model->b);
    if (!model->sigma.empty()) s.set("sigma", model->sigma);
  }
  {
    auto& s = doc.section("grid");
    s.set("T", format_double(grid.T));
    s.set("steps", std::to_string(grid.steps));
  }
  {
    auto& s = doc.section("mc");
    s.set("N", std::to_string(mc.N));
    s.set("seed", std::to_string(mc.seed));
    s.set("batches", std::to_string(mc.batches));
    s.set("phi", mc.phi);
    s.set("mode", mc.independent ? "independent" : "coupled");
  }
  if (sweep) {
    auto& s = doc.section("sweep");
    s.set("parameter", sweep->parameter);
    s.set("values", format_list(sweep->values));
  }
  {
    auto& s = doc.section("output");
    s.set("dir", output.dir);
    s.set("dump_paths", std::to_string(output.dump_paths));
  }
  return doc;
}

ConfigEcho RunConfig::echo() const {
  ConfigEcho out;
  for (const auto& s : to_document().sections) {
    for (const auto& e : s.entries) out[s.name][e.key] = e.value;
  }
  return out;
}

const Kernel& RunConfig::require_kernel() const {
  if (!kernel) throw ConfigError("missing [kernel] section");
  return *kernel;
}

RuleDesign RunConfig::rule_design() const {
  const RuleConfig r = rule.value_or(RuleConfig{});
  const double H = r.H ? *r.H : require_kernel().H();
  RuleDesign d = default_design(H, grid.T, grid.T / grid.steps, r.cells, r.points_per_cell);
  if (r.cut_low) d.cut_low = *r.cut_low;
  if (r.cut_high) d.cut_high = *r.cut_high;
  d.lump_low_tail = r.lump_low_tail;
  return d;
}

std::optional<Kernel> RunConfig::approximating_kernel() const {
  if (kernel_bar) return kernel_bar;
  if (!rule) return std::nullopt;
  const Kernel& K = require_kernel();
  const double H = rule->H ? *rule->H : K.H();
  return to_kernel(build_rule(H, rule_design()), K.scale());
}

Kernel RunConfig::approximating_kernel_at(double value) const {
  const std::string parameter = sweep ? sweep->parameter : "tau";
  if (parameter == "tau") {
    if (!kernel_bar || !kernel_bar->has_tau()) {
      throw ConfigError("a tau sweep needs a smoothed or truncated [kernel_bar]");
    }
    const Kernel& kb = *kernel_bar;
    return kb.family() == KernelFamily::Smoothed ? Kernel::smoothed(kb.H(), value, kb.scale())
                                                 : Kernel::truncated(kb.H(), value, kb.scale());
  }
  if (!rule) throw ConfigError("a cells sweep needs a [rule] section");
  if (value < 1 || value != std::floor(value)) throw ConfigError("cells must be a positive integer");
  RunConfig copy = *this;
  copy.kernel_bar.reset();
  copy.rule->cells = static_cast<int>(value);
  return *copy.approximating_kernel();
}

ModelSpec RunConfig::build_model() const {
  if (!model) throw ConfigError("missing [model] section");
  const ModelConfig& m = *model;
  switch (m.variant) {
    case ModelVariant::RoughBergomi:
      return ModelSpec::rough_bergomi(m.nu, m.H, m.rho, m.X0);
    case ModelVariant::Dissipation: {
      const double scale = m.scale ? *m.scale : (kernel ? kernel->scale() : 1.0);
      return ModelSpec::dissipation(m.nu, m.H, scale, m.X0);
    }
    case ModelVariant::Custom:
      return ModelSpec::custom(m.b, m.sigma, m.rho, m.X0);
  }
  throw ConfigError("unknown model variant");
}

RunConfig parse_config(std::string_view text) {
  return RunConfig::from_document(parse_config_document(text));
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace volterra
