#pragma once

// Drives every CLI subcommand on a generated fixture directory and collects
// the bytes of everything written, for determinism comparisons.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cli.hpp"
#include "support.hpp"

namespace testsupport {

inline int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "unicam");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return unicam::cli::run(static_cast<int>(argv.size()), argv.data());
}

struct CliSweep {
  std::map<std::string, std::string> files;  // relative path -> bytes
  std::map<std::string, int> exit_codes;     // subcommand label -> exit code
};

inline CliSweep sweep_cli(const fs::path& work, int threads, std::uint64_t seed = 42) {
  CliSweep s;
  const auto t = std::to_string(threads);
  const auto fx = work / "fx";
  const auto out = work / "out";
  fs::create_directories(out);
  const auto p = [&](const fs::path& x) { return x.string(); };
  const auto run = [&](const std::string& label, std::vector<std::string> args) {
    args.insert(args.begin(), {"--threads", t});
    s.exit_codes[label] = run_cli(std::move(args));
  };

  run("fixtures", {"fixtures", "generate", "--seed", std::to_string(seed), "--n", "8", "--out", p(fx)});
  run("dcor", {"dcor", "--x", p(fx / "student_acts.npy"), "--y", p(fx / "base_acts.npy"), "--sqrt", "--out",
               p(out / "dcor.json")});
  run("dcor-manifest", {"dcor", "--x", p(fx / "student.json"), "--y", p(fx / "base.json"), "--out",
                        p(out / "dcor_manifest.json")});
  run("pdcor", {"pdcor", "--x", p(fx / "student_acts.npy"), "--y", p(fx / "images.npy"), "--z",
                p(fx / "base_acts.npy"), "--out", p(out / "pdcor.json")});
  run("unicam-distilled", {"unicam", "--student", p(fx / "student.json"), "--base", p(fx / "base.json"), "--mode",
                           "distilled", "--out", p(out / "distilled.npy"), "--render", p(out / "distilled_pgm"),
                           "--report", p(out / "distilled.json")});
  run("unicam-residual", {"unicam", "--student", p(fx / "student.json"), "--base", p(fx / "base.json"), "--mode",
                          "residual", "--out", p(out / "residual.npy"), "--report", p(out / "residual.json")});
  run("gradcam", {"gradcam", "--manifest", p(fx / "student.json"), "--out", p(out / "gradcam.npy"), "--render",
                  p(out / "gradcam_pgm"), "--report", p(out / "gradcam.json")});
  run("fss", {"fss", "--student", p(fx / "student_feats.json"), "--base", p(fx / "base_feats.json"), "--out",
              p(out / "fss.json")});
  run("rs", {"rs", "--feats", p(fx / "student_feats.json"), "--table", p(fx / "embeddings.npy"), "--out",
             p(out / "rs.json")});
  run("perturb", {"perturb", "--images", p(fx / "images.npy"), "--heatmaps", p(out / "distilled.npy"), "--normalize",
                  "--out", p(out / "perturbed.npy"), "--features-out", p(out / "feats.npy"), "--net", "student",
                  "--fixture-seed", std::to_string(seed)});
  run("render", {"render", "--maps", p(out / "gradcam.npy"), "--out", p(out / "render"), "--size", "32", "32",
                 "--normalized-out", p(out / "gradcam_norm.npy")});

  for (const auto& e : fs::recursive_directory_iterator(work))
    if (e.is_regular_file()) s.files[fs::relative(e.path(), work).string()] = slurp(e.path());
  return s;
}

}  // namespace testsupport
