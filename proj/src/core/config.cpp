#include "uwir/core/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "uwir/core/errors.hpp"

namespace uwir {
namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<int> parse_ints(const std::string& s, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw InvalidInput("config: bad integer list for " + key + ": " + s);
    }
  }
  if (out.empty()) throw InvalidInput("config: empty list for " + key);
  return out;
}

double parse_real(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput("config: bad real for " + key + ": " + s);
  }
}

long long parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput("config: bad integer for " + key + ": " + s);
  }
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (stage_depths.size() != 4 || stage_widths.size() != 4)
    throw InvalidInput("config: stage_depths and stage_widths must have length 4");
  for (int d : stage_depths)
    if (d < 1) throw InvalidInput("config: stage_depths entries must be >= 1");
  for (int w : stage_widths)
    if (w < 1) throw InvalidInput("config: stage_widths entries must be >= 1");
  if (prior_dim < 1) throw InvalidInput("config: prior_dim must be >= 1");
  if (num_prompts < 1) throw InvalidInput("config: num_prompts must be >= 1");
  if (num_experts < 1) throw InvalidInput("config: num_experts must be >= 1");
  if (top_k < 1 || top_k > num_experts)
    throw InvalidInput("config: top_k must satisfy 1 <= k <= num_experts");
  if (diffusion_steps < 1) throw InvalidInput("config: diffusion_steps must be >= 1");
  if (!(0.0 < alpha_T && alpha_T < alpha_1 && alpha_1 < 1.0))
    throw InvalidInput("config: alphas must satisfy 0 < alpha_T < alpha_1 < 1");
  if (lr_init <= 0.0 || lr_final <= 0.0 || lr_final > lr_init)
    throw InvalidInput("config: learning rates must satisfy 0 < lr_final <= lr_init");
  if (batch < 1) throw InvalidInput("config: batch must be >= 1");
  if (crop < 8) throw InvalidInput("config: crop must be >= 8");
  if (iters_stage1 < 0 || iters_stage2 < 0)
    throw InvalidInput("config: iteration counts must be >= 0");
}

std::string RunConfig::to_kv() const {
  // Keys emitted in sorted order so snapshots are byte-stable.
  std::map<std::string, std::string> kv;
  kv["alpha_1"] = fmt_real(alpha_1);
  kv["alpha_T"] = fmt_real(alpha_T);
  kv["batch"] = std::to_string(batch);
  kv["crop"] = std::to_string(crop);
  kv["diffusion_steps"] = std::to_string(diffusion_steps);
  kv["iters_stage1"] = std::to_string(iters_stage1);
  kv["iters_stage2"] = std::to_string(iters_stage2);
  kv["lambda1"] = fmt_real(lambda1);
  kv["lambda2"] = fmt_real(lambda2);
  kv["lr_final"] = fmt_real(lr_final);
  kv["lr_init"] = fmt_real(lr_init);
  kv["num_experts"] = std::to_string(num_experts);
  kv["num_prompts"] = std::to_string(num_prompts);
  kv["prior_dim"] = std::to_string(prior_dim);
  kv["seed"] = std::to_string(seed);
  kv["stage_depths"] = join_ints(stage_depths);
  kv["stage_widths"] = join_ints(stage_widths);
  kv["top_k"] = std::to_string(top_k);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

RunConfig RunConfig::from_kv(const std::string& text) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config: line " + std::to_string(lineno) + " is not key=value");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    if (key == "stage_depths") c.stage_depths = parse_ints(val, key);
    else if (key == "stage_widths") c.stage_widths = parse_ints(val, key);
    else if (key == "prior_dim") c.prior_dim = static_cast<int>(parse_int(val, key));
    else if (key == "num_prompts") c.num_prompts = static_cast<int>(parse_int(val, key));
    else if (key == "num_experts") c.num_experts = static_cast<int>(parse_int(val, key));
    else if (key == "top_k") c.top_k = static_cast<int>(parse_int(val, key));
    else if (key == "diffusion_steps") c.diffusion_steps = static_cast<int>(parse_int(val, key));
    else if (key == "alpha_1") c.alpha_1 = parse_real(val, key);
    else if (key == "alpha_T") c.alpha_T = parse_real(val, key);
    else if (key == "lambda1") c.lambda1 = parse_real(val, key);
    else if (key == "lambda2") c.lambda2 = parse_real(val, key);
    else if (key == "lr_init") c.lr_init = parse_real(val, key);
    else if (key == "lr_final") c.lr_final = parse_real(val, key);
    else if (key == "batch") c.batch = static_cast<int>(parse_int(val, key));
    else if (key == "crop") c.crop = static_cast<int>(parse_int(val, key));
    else if (key == "iters_stage1") c.iters_stage1 = static_cast<int>(parse_int(val, key));
    else if (key == "iters_stage2") c.iters_stage2 = static_cast<int>(parse_int(val, key));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(val, key));
    else throw InvalidInput("config: unknown key " + key);
  }
  return c;
}

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_kv(ss.str());
}

void RunConfig::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("config: cannot write " + path);
  out << to_kv();
  if (!out) throw IoError("config: write failed for " + path);
}

}  // namespace uwir
