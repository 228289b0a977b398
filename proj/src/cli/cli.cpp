#include "uwir/cli/cli.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uwir/backbone/backbone.hpp"
#include "uwir/core/checkpoint.hpp"
#include "uwir/core/config.hpp"
#include "uwir/core/errors.hpp"
#include "uwir/core/image_io.hpp"
#include "uwir/core/pad.hpp"
#include "uwir/core/rng.hpp"
#include "uwir/depth/depth.hpp"
#include "uwir/lcdm/lcdm.hpp"
#include "uwir/metrics/metrics.hpp"
#include "uwir/sfpg/sfpg.hpp"
#include "uwir/trainer/trainer.hpp"
#include "uwir/wmoe/wmoe.hpp"

namespace uwir::cli {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> list_pngs(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png")
      names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

// Write-then-rename so a crash never leaves a half-written artifact behind.
void atomic_save_rgb(const Tensor& img, const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  save_png_rgb(img, tmp.string());
  fs::rename(tmp, path);
}

void atomic_write_text(const std::string& text, const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  std::ofstream f(tmp);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  f.close();
  fs::rename(tmp, path);
}

std::string fnv1a64_hex(const Tensor& t) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const unsigned char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (int d : t.shape) {
    auto v = static_cast<std::uint64_t>(d);
    mix(reinterpret_cast<const unsigned char*>(&v), sizeof v);
  }
  mix(reinterpret_cast<const unsigned char*>(t.data.data()), t.data.size() * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

depth::DepthProviderSpec make_depth_spec(const std::string& provider, const std::string& cmd) {
  depth::DepthProviderSpec spec;
  if (provider == "external") {
    spec.mode = depth::DepthProviderSpec::Mode::external;
    spec.external_command = cmd;
    spec.differentiable = false;
  }
  spec.validate();
  return spec;
}

int cmd_validate(const std::string& root) {
  fs::path in = fs::path(root) / "input";
  fs::path gt = fs::path(root) / "gt";
  if (!fs::is_directory(in) || !fs::is_directory(gt)) {
    std::fprintf(stderr, "validate: %s must contain input/ and gt/ folders\n", root.c_str());
    return 1;
  }
  std::set<std::string> in_names, gt_names;
  for (const auto& e : fs::directory_iterator(in))
    if (e.is_regular_file()) in_names.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(gt))
    if (e.is_regular_file()) gt_names.insert(e.path().filename().string());

  int problems = 0;
  int pairs = 0;
  for (const auto& name : in_names) {
    if (!gt_names.count(name)) {
      std::printf("missing gt: %s\n", name.c_str());
      ++problems;
      continue;
    }
    Tensor a, b;
    bool ok = true;
    try {
      a = load_png_rgb((in / name).string());
    } catch (const std::exception& e) {
      std::printf("undecodable input: %s (%s)\n", name.c_str(), e.what());
      ++problems;
      ok = false;
    }
    try {
      b = load_png_rgb((gt / name).string());
    } catch (const std::exception& e) {
      std::printf("undecodable gt: %s (%s)\n", name.c_str(), e.what());
      ++problems;
      ok = false;
    }
    if (ok && a.shape != b.shape) {
      std::printf("size mismatch: %s\n", name.c_str());
      ++problems;
      ok = false;
    }
    if (ok) ++pairs;
  }
  for (const auto& name : gt_names)
    if (!in_names.count(name)) {
      std::printf("unpaired gt: %s\n", name.c_str());
      ++problems;
    }
  if (problems == 0) {
    std::printf("%d pairs OK\n", pairs);
    return 0;
  }
  std::printf("%d problem(s), %d clean pair(s)\n", problems, pairs);
  return 1;
}

std::vector<trainer::SamplePair> load_dataset(const fs::path& root) {
  fs::path in = root / "input";
  fs::path gt = root / "gt";
  if (!fs::is_directory(in) || !fs::is_directory(gt))
    throw InvalidInput("dataset root must contain input/ and gt/ folders: " + root.string());
  std::vector<trainer::SamplePair> pairs;
  for (const auto& name : list_pngs(in)) {
    fs::path g = gt / name;
    if (!fs::exists(g)) throw InvalidInput("missing gt for " + name + "; run validate first");
    trainer::SamplePair p;
    p.lq = load_png_rgb((in / name).string());
    p.gt = load_png_rgb(g.string());
    if (p.lq.shape != p.gt.shape)
      throw InvalidInput("size mismatch for " + name + "; run validate first");
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw InvalidInput("no .png pairs under " + root.string());
  return pairs;
}

void save_ckpt(const ad::ParamStore& ps, const CheckpointMeta& meta, const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  trainer::save_params(ps, meta, tmp.string());
  fs::rename(tmp, path);
}

int cmd_train(int stage, const std::string& config_path, const std::string& resume,
              const std::string& data_root, const std::string& out_dir, int iters_override,
              int ckpt_every, const std::string& depth_provider, const std::string& depth_cmd) {
  RunConfig cfg = RunConfig::load_file(config_path);
  if (iters_override >= 0) (stage == 1 ? cfg.iters_stage1 : cfg.iters_stage2) = iters_override;
  cfg.validate();

  auto pairs = load_dataset(data_root);
  fs::create_directories(out_dir);

  trainer::Models m;
  m.cfg = cfg;
  m.depth_spec = make_depth_spec(depth_provider, depth_cmd);
  Rng rng(cfg.seed);
  trainer::build_stage1(m, rng);
  if (stage == 2) trainer::build_stage2_extras(m, rng);

  trainer::TrainState st;
  st.stage = stage;
  st.rng = rng;  // continue the init stream; resume overwrites the state below

  if (!resume.empty()) {
    CheckpointMeta meta = trainer::load_params(m.ps, resume);
    if (stage == 2 && meta.stage == "stage1") {
      m.stage1_ready = true;  // fresh stage-two run on top of finished stage one
    } else if (meta.stage == "stage" + std::to_string(stage)) {
      st.iteration = static_cast<int>(meta.iteration);
      m.stage1_ready = true;
    } else {
      throw InvalidInput("checkpoint tagged '" + meta.stage + "' cannot seed stage " +
                         std::to_string(stage));
    }
    st.rng.set_state(meta.rng_state);
    // Optimizer moments are not serialized; they and their bias-correction
    // counter restart together.
    st.opt_step = 0;
  } else if (stage == 2) {
    throw StagingError("stage 2 requires --resume with a stage-one checkpoint");
  }

  int total = stage == 1 ? cfg.iters_stage1 : cfg.iters_stage2;
  int n = static_cast<int>(pairs.size());
  trainer::EpochSampler sampler(n, cfg.batch);
  // The sampler runs on its own stream so its position can be replayed on
  // resume by fast-forwarding, independent of the training draws.
  Rng sampler_rng(~cfg.seed);
  for (int k = 0; k < st.iteration; ++k) sampler.next(sampler_rng);

  fs::path csv_path = fs::path(out_dir) / ("train_stage" + std::to_string(stage) + ".csv");
  bool append = !resume.empty() && fs::exists(csv_path);
  std::ofstream csv(csv_path, append ? std::ios::app : std::ios::trunc);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  if (!append) csv << trainer::log_header() << '\n';

  auto checkpoint_meta = [&]() {
    CheckpointMeta meta;
    meta.config_kv = cfg.to_kv();
    meta.stage = "stage" + std::to_string(stage);
    meta.iteration = st.iteration;
    meta.rng_state = st.rng.state();
    return meta;
  };

  while (st.iteration < total) {
    auto idx = sampler.next(sampler_rng);
    std::vector<trainer::SamplePair> batch;
    for (int i : idx)
      batch.push_back(trainer::augment(pairs[i].lq, pairs[i].gt, cfg.crop, st.rng));
    auto t0 = std::chrono::steady_clock::now();
    losses::LossReport rep =
        stage == 1 ? trainer::stage1_step(m, st, batch) : trainer::stage2_step(m, st, batch);
    double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    csv << trainer::log_row(st.iteration, st.stage, st.lr, rep, wall_ms) << '\n';
    csv.flush();
    if (ckpt_every > 0 && st.iteration % ckpt_every == 0) {
      char tag[32];
      std::snprintf(tag, sizeof tag, "stage%d_iter%06d.ckpt", stage, st.iteration);
      save_ckpt(m.ps, checkpoint_meta(), fs::path(out_dir) / tag);
    }
  }

  fs::path final_path =
      fs::path(out_dir) / ("stage" + std::to_string(stage) + "_final.ckpt");
  save_ckpt(m.ps, checkpoint_meta(), final_path);
  std::printf("stage %d complete at iteration %d; checkpoint %s\n", stage, st.iteration,
              final_path.string().c_str());
  return 0;
}

int cmd_restore(const std::string& in_dir, const std::string& out_dir, const std::string& ckpt,
                const std::string& depth_provider, const std::string& depth_cmd,
                const std::string& depth_cache, std::uint64_t seed,
                const std::string& expert_csv) {
  Checkpoint ck = load_checkpoint(ckpt);
  if (ck.meta.stage != "stage2")
    throw InvalidInput("restore needs a stage-two checkpoint, got '" + ck.meta.stage + "'");
  RunConfig cfg = RunConfig::from_kv(ck.meta.config_kv);

  trainer::Models m;
  m.cfg = cfg;
  Rng build_rng(cfg.seed);
  trainer::build_stage1(m, build_rng);
  trainer::build_stage2_extras(m, build_rng);
  trainer::load_params(m.ps, ckpt);

  depth::DepthProviderSpec spec = make_depth_spec(depth_provider, depth_cmd);
  bool use_cache = spec.mode == depth::DepthProviderSpec::Mode::external && !depth_cache.empty();
  if (use_cache) fs::create_directories(depth_cache);

  if (!fs::is_directory(in_dir)) throw InvalidInput("restore: no such input folder: " + in_dir);
  fs::create_directories(out_dir);
  auto names = list_pngs(in_dir);

  Rng rng(seed);
  wmoe::ExpertHistogram hist;
  int failed = 0;
  for (const auto& name : names) {
    try {
      Tensor img = load_png_rgb((fs::path(in_dir) / name).string());
      PaddedImage padded = pad_to_multiple(img, 8);
      int h = padded.t.dim(0), w = padded.t.dim(1);

      Tensor draster;
      if (use_cache) {
        // External calls dominate runtime; key the cache by image content so
        // renames and reruns hit it. The provider exchange is 16-bit PNG, so
        // caching through the same format loses nothing.
        fs::path entry = fs::path(depth_cache) / (fnv1a64_hex(padded.t) + ".png");
        if (!fs::exists(entry)) {
          Tensor fresh = depth::predict_depth(padded.t, spec);
          fs::path tmp = entry;
          tmp += ".tmp";
          save_png_gray16(fresh, tmp.string());
          fs::rename(tmp, entry);
        }
        draster = load_png_gray16(entry.string());
        if (draster.dim(0) != h || draster.dim(1) != w)
          throw ProviderError("depth cache entry has the wrong size; clear " + depth_cache);
      } else {
        draster = depth::predict_depth(padded.t, spec);
      }

      ad::Tape t;
      ad::Var x = t.constant(padded.t);
      ad::Var c = sfpg::forward_star(t, m.ps, cfg, x).prior;
      ad::Var z_hat = lcdm::sample(t, m.ps, cfg, c, m.sched, rng);
      ad::Var d = t.constant(Tensor({h, w, 1}, draster.data));
      ad::Var y = backbone::restore(t, m.ps, cfg, x, z_hat, d, false, &hist);
      atomic_save_rgb(crop_to_record(y.val(), padded.crop), fs::path(out_dir) / name);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "restore: %s: %s\n", name.c_str(), e.what());
      ++failed;
    }
  }
  if (!expert_csv.empty()) {
    fs::path tmp = fs::path(expert_csv + ".tmp");
    hist.write_csv(tmp.string());
    fs::rename(tmp, expert_csv);
  }
  std::printf("restored %d/%d image(s)\n", static_cast<int>(names.size()) - failed,
              static_cast<int>(names.size()));
  return failed == 0 ? 0 : 1;
}

int cmd_evaluate(const std::string& restored_dir, const std::string& gt_dir, bool no_ref,
                 const std::string& out_csv) {
  if (!fs::is_directory(restored_dir))
    throw InvalidInput("evaluate: no such folder: " + restored_dir);
  if (!no_ref && !fs::is_directory(gt_dir))
    throw InvalidInput("evaluate: no such folder: " + gt_dir);

  metrics::MetricReport rep;
  int skipped = 0;
  for (const auto& name : list_pngs(restored_dir)) {
    Tensor r;
    try {
      r = load_png_rgb((fs::path(restored_dir) / name).string());
    } catch (const std::exception& e) {
      std::fprintf(stderr, "evaluate: %s: %s\n", name.c_str(), e.what());
      ++skipped;
      continue;
    }
    rep.add(name, "uciqe", metrics::uciqe(r));
    rep.add(name, "uiqm", metrics::uiqm(r));
    if (no_ref) continue;
    fs::path g = fs::path(gt_dir) / name;
    if (!fs::exists(g)) {
      std::fprintf(stderr, "evaluate: unpaired (no gt): %s\n", name.c_str());
      ++skipped;
      continue;
    }
    try {
      Tensor gt = load_png_rgb(g.string());
      rep.add(name, "psnr", metrics::psnr(r, gt));
      rep.add(name, "ssim", metrics::ssim(r, gt));
    } catch (const std::exception& e) {
      std::fprintf(stderr, "evaluate: %s: %s\n", name.c_str(), e.what());
      ++skipped;
    }
  }

  atomic_write_text(rep.to_csv(), out_csv);
  for (const auto& [metric, mean] : rep.aggregate())
    std::printf("mean %s: %.6g\n", metric.c_str(), mean);
  std::printf("wrote %s\n", out_csv.c_str());
  return skipped == 0 ? 0 : 1;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"underwater image restoration toolkit"};
  app.require_subcommand(1);

  std::string v_root;
  auto* v = app.add_subcommand("validate", "check a dataset folder for paired, decodable images");
  v->add_option("root", v_root, "dataset root containing input/ and gt/")->required();

  int t_stage = 1, t_iters = -1, t_ckpt_every = 0;
  std::string t_config, t_resume, t_data, t_out, t_provider = "stub", t_cmd;
  auto* t = app.add_subcommand("train", "run one training stage");
  t->add_option("--stage", t_stage, "1 or 2")->required()->check(CLI::Range(1, 2));
  t->add_option("--config", t_config, "run configuration file")->required();
  t->add_option("--data", t_data, "dataset root")->required();
  t->add_option("--out", t_out, "artifact folder for checkpoints and the loss log")->required();
  t->add_option("--resume", t_resume, "checkpoint to continue from");
  t->add_option("--iters", t_iters, "override the configured iteration count");
  t->add_option("--ckpt-every", t_ckpt_every, "also checkpoint every N iterations");
  t->add_option("--depth-provider", t_provider, "stub or external")
      ->check(CLI::IsMember({"stub", "external"}));
  t->add_option("--depth-cmd", t_cmd, "external depth command: <cmd> in.png out.png");

  std::string r_in, r_out, r_ckpt, r_provider = "stub", r_cmd, r_cache, r_expert;
  std::uint64_t r_seed = 0;
  auto* r = app.add_subcommand("restore", "restore a folder of images");
  r->add_option("--in", r_in, "folder of degraded .png images")->required();
  r->add_option("--out", r_out, "output folder")->required();
  r->add_option("--ckpt", r_ckpt, "stage-two checkpoint")->required();
  r->add_option("--depth-provider", r_provider, "stub or external")
      ->check(CLI::IsMember({"stub", "external"}));
  r->add_option("--depth-cmd", r_cmd, "external depth command");
  r->add_option("--depth-cache", r_cache, "content-hash keyed 16-bit PNG depth cache folder");
  r->add_option("--seed", r_seed, "sampling seed");
  r->add_option("--expert-csv", r_expert, "write the expert selection histogram here");

  std::string e_restored, e_gt, e_out = "metrics.csv";
  bool e_noref = false;
  auto* e = app.add_subcommand("evaluate", "score restored images");
  e->add_option("--restored", e_restored, "folder of restored .png images")->required();
  e->add_option("--gt", e_gt, "reference folder for full-reference metrics");
  e->add_flag("--no-ref", e_noref, "no-reference metrics only");
  e->add_option("--out", e_out, "metrics CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*v) return cmd_validate(v_root);
    if (*t)
      return cmd_train(t_stage, t_config, t_resume, t_data, t_out, t_iters, t_ckpt_every,
                       t_provider, t_cmd);
    if (*r)
      return cmd_restore(r_in, r_out, r_ckpt, r_provider, r_cmd, r_cache, r_seed, r_expert);
    if (*e) {
      if (!e_noref && e_gt.empty()) {
        std::fprintf(stderr, "evaluate: pass either --gt or --no-ref\n");
        return 2;
      }
      if (e_noref && !e_gt.empty()) {
        std::fprintf(stderr, "evaluate: --gt and --no-ref are mutually exclusive\n");
        return 2;
      }
      return cmd_evaluate(e_restored, e_gt, e_noref, e_out);
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "uwir: %s\n", err.what());
    return 1;
  }
  return 2;
}

}  // namespace uwir::cli
