#include "segadv/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace segadv {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_plain(std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw DomainError("not a number: '" + std::string(text) + "'");
  return v;
}

long long parse_integer(std::string_view text) {
  text = trim(text);
  long long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw DomainError("not an integer: '" + std::string(text) + "'");
  return v;
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw DomainError("not a boolean: '" + std::string(text) + "'");
}

std::string normalize_key(std::string_view key) {
  std::string k(trim(key));
  while (k.starts_with("-")) k.erase(0, 1);
  for (char& ch : k) {
    if (ch == '-') ch = '_';
  }
  return k;
}

}  // namespace

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::point: return "point";
    case AttackKind::s_ra: return "s_ra";
    case AttackKind::t_ra: return "t_ra";
  }
  return "?";
}

AttackKind parse_attack_kind(std::string_view text) {
  std::string t(trim(text));
  for (char& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "point") return AttackKind::point;
  if (t == "s_ra" || t == "s-ra" || t == "sra") return AttackKind::s_ra;
  if (t == "t_ra" || t == "t-ra" || t == "tra") return AttackKind::t_ra;
  throw DomainError("unknown attack '" + std::string(text) + "' (expected point, s_ra or t_ra)");
}

double parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw DomainError("empty number");
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_plain(text);
  const double num = parse_plain(trim(text.substr(0, slash)));
  const double den = parse_plain(trim(text.substr(slash + 1)));
  if (den == 0.0) throw DomainError("zero denominator in '" + std::string(text) + "'");
  return num / den;
}

Region parse_region(std::string_view text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) throw DomainError("region must be x,y,w,h: '" + std::string(text) + "'");
  Region r;
  r.left = parse_integer(parts[0]);
  r.top = parse_integer(parts[1]);
  r.width = parse_integer(parts[2]);
  r.height = parse_integer(parts[3]);
  if (r.left < 0 || r.top < 0 || r.width < 1 || r.height < 1) {
    throw DomainError("region needs x,y >= 0 and w,h >= 1: '" + std::string(text) + "'");
  }
  return r;
}

void apply_setting(RunConfig& cfg, std::string_view key_text, std::string_view value_text) {
  const std::string key = normalize_key(key_text);
  const std::string_view value = trim(value_text);
  auto numbers = [&] {
    std::vector<double> out;
    for (auto part : split(value, ',')) out.push_back(parse_number(part));
    return out;
  };

  if (key == "corpus") {
    cfg.corpus = std::string(value);
  } else if (key == "images" || key == "count") {
    cfg.synthetic.count = parse_integer(value);
  } else if (key == "size") {
    const auto parts = split(value, 'x');
    if (parts.size() == 1) {
      cfg.synthetic.height = cfg.synthetic.width = parse_integer(parts[0]);
    } else if (parts.size() == 2) {
      cfg.synthetic.height = parse_integer(parts[0]);
      cfg.synthetic.width = parse_integer(parts[1]);
    } else {
      throw DomainError("size must be N or HxW: '" + std::string(value) + "'");
    }
  } else if (key == "channels") {
    cfg.synthetic.channels = parse_integer(value);
  } else if (key == "texture") {
    cfg.synthetic.texture = parse_number(value);
  } else if (key == "shading") {
    cfg.synthetic.shading = parse_number(value);
  } else if (key == "attack") {
    cfg.attack = parse_attack_kind(value);
  } else if (key == "epsilon" || key == "eps") {
    cfg.epsilons = numbers();
  } else if (key == "rho") {
    cfg.rhos = numbers();
  } else if (key == "lambda") {
    cfg.lambdas.clear();
    for (auto part : split(value, ',')) cfg.lambdas.push_back(parse_integer(part));
  } else if (key == "alpha") {
    cfg.alpha = parse_number(value);
  } else if (key == "steps") {
    cfg.steps = static_cast<int>(parse_integer(value));
  } else if (key == "samples") {
    cfg.samples = static_cast<int>(parse_integer(value));
  } else if (key == "sigma") {
    if (value == "auto" || value == "epsilon") cfg.sigma.reset();
    else cfg.sigma = parse_number(value);
  } else if (key == "neg_th") {
    cfg.neg_th = parse_number(value);
  } else if (key == "region") {
    if (value == "default" || value == "center") cfg.region.reset();
    else cfg.region = parse_region(value);
  } else if (key == "source_model") {
    cfg.source_model = std::string(value);
  } else if (key == "eval_model") {
    cfg.eval_models.clear();
    for (auto part : split(value, ',')) cfg.eval_models.emplace_back(part);
  } else if (key == "checkpoint") {
    cfg.checkpoint = std::string(value);
  } else if (key == "out") {
    cfg.out = std::string(value);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_integer(value));
  } else if (key == "trials") {
    cfg.trials = static_cast<int>(parse_integer(value));
  } else if (key == "workers") {
    cfg.workers = static_cast<int>(parse_integer(value));
  } else if (key == "bundles") {
    cfg.bundles = parse_bool(value);
  } else {
    throw DomainError("unknown setting '" + std::string(key_text) + "'");
  }
}

AttackConfig RunConfig::attack_config(double epsilon, double rho, Index lambda) const {
  AttackConfig a;
  a.epsilon = epsilon;
  a.alpha = alpha;
  a.steps = effective_steps();
  a.samples = samples;
  a.rho = rho;
  a.sigma = sigma;
  a.lambda = lambda;
  a.neg_th = neg_th;
  a.seed = seed;
  return a;
}

void RunConfig::validate() const {
  if (epsilons.empty()) throw DomainError("no epsilon values");
  if (rhos.empty()) throw DomainError("no rho values");
  if (lambdas.empty()) throw DomainError("no lambda values");
  if (eval_models.empty()) throw DomainError("no evaluation models");
  if (source_model.empty()) throw DomainError("no source model");
  if (trials < 1) throw DomainError("trials must be >= 1");
  if (workers < 0) throw DomainError("workers must be >= 0");
  if (corpus.empty()) {
    if (synthetic.count < 1) throw DomainError("synthetic corpus needs at least one image");
    if (synthetic.height < 3 || synthetic.width < 3) throw DomainError("synthetic images must be at least 3x3");
  }
  for (double e : epsilons) {
    for (double r : rhos) {
      for (Index l : lambdas) attack_config(e, r, l).validate();
    }
  }
}

RunConfig parse_config(std::string_view text, const RunConfig& base, std::string_view origin) {
  RunConfig cfg = base;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    const std::string where = std::string(origin) + ":" + std::to_string(lineno);
    if (eq == std::string_view::npos) throw DomainError(where + ": expected key = value");
    try {
      apply_setting(cfg, view.substr(0, eq), view.substr(eq + 1));
    } catch (const DomainError& e) {
      throw DomainError(where + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read config " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config(os.str(), base, path.string());
}

}  // namespace segadv
