#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef LTAE_CLI_PATH
#error "LTAE_CLI_PATH must point at the command-line binary"
#endif

namespace {

namespace fs = std::filesystem;

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

// Scratch directory shared by all cases in this binary; cleaned up on exit.
const fs::path& scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "ltae-cli-scratch";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

CommandResult run_cli(const std::string& args) {
  static int invocation = 0;
  const fs::path capture = scratch_dir() / ("capture-" + std::to_string(invocation++));
  const std::string command =
      std::string(LTAE_CLI_PATH) + " " + args + " > " + capture.string() + " 2>&1";
  const int raw = std::system(command.c_str());
  CommandResult result;
  result.output = read_file(capture);
  if (raw >= 0 && WIFEXITED(raw)) result.exit_code = WEXITSTATUS(raw);
  return result;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

const std::string kSynthSpec = R"({
  "num_classes": 3, "seq_len": 8, "channels": 6, "samples_per_class": 20,
  "event_centers": [50, 150, 250], "event_width": 30, "noise": 0.2,
  "payload": "pixel_sets", "pixels_per_set": 3, "seed": 4
})";

const std::string kRunConfig = R"({
  "pipeline": {
    "spatial": {"channels": 6, "pixel_mlp": [6, 8], "pooled_mlp": [16, 8]},
    "temporal": "ltae",
    "ltae": {"input_dim": 8, "seq_len": 8, "num_heads": 2, "key_dim": 3,
             "mlp_widths": [8, 6]},
    "decoder_widths": [6, 8, 3],
    "num_classes": 3,
    "seed": 9
  },
  "training": {"epochs": 30, "batch_size": 8, "learning_rate": 0.002,
               "optimizer": "adam", "seed": 2, "val_fraction": 0.25}
})";

}  // namespace

TEST_CASE("count reports the reference cost with its convention") {
  const CommandResult result = run_cli("count --preset ltae-default --flops");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("param_count: 35200\n") != std::string::npos);
  CHECK(result.output.find("flops_total: 190080\n") != std::string::npos);
  CHECK(result.output.find("mflops_total: 0.190080\n") != std::string::npos);
  CHECK(result.output.find("convention:") != std::string::npos);

  const CommandResult params = run_cli("count --preset ltae-default --params");
  CHECK(params.exit_code == 0);
  CHECK(params.output == "param_count: 35200\n");
}

TEST_CASE("count accepts a run config naming the temporal module") {
  const fs::path config = scratch_dir() / "count-config.json";
  write_file(config, R"({
    "pipeline": {
      "temporal": "tae",
      "tae": {"input_dim": 8, "seq_len": 4, "num_heads": 2, "key_dim": 3,
              "mlp_widths": [16, 5]}
    }
  })");
  const CommandResult result = run_cli("count --config " + config.string() + " --flops");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("asymptotic: keys O(HTEK)") != std::string::npos);
}

TEST_CASE("config failures exit with status two and one error line") {
  const CommandResult unknown = run_cli("count --preset nope");
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.output.rfind("error: config:", 0) == 0);
  CHECK(unknown.output.find('\n') == unknown.output.size() - 1);

  const CommandResult missing = run_cli("count");
  CHECK(missing.exit_code == 2);

  const fs::path bad = scratch_dir() / "indivisible.json";
  write_file(bad,
             R"({"pipeline": {"ltae": {"input_dim": 10, "num_heads": 3,
                 "mlp_widths": [10]}}})");
  const CommandResult indivisible = run_cli("count --config " + bad.string() + " --flops");
  CHECK(indivisible.exit_code == 2);
  CHECK(indivisible.output.find("must divide") != std::string::npos);

  const fs::path malformed = scratch_dir() / "malformed.json";
  write_file(malformed, "{\"pipeline\": }");
  const CommandResult parse = run_cli("count --config " + malformed.string());
  CHECK(parse.exit_code == 2);

  const CommandResult badflag = run_cli("count --no-such-flag");
  CHECK(badflag.exit_code == 2);
}

TEST_CASE("data failures exit with status three") {
  const CommandResult missing =
      run_cli("evaluate --checkpoint nowhere.json --data nowhere.jsonl");
  CHECK(missing.exit_code == 3);
  CHECK(missing.output.rfind("error: data:", 0) == 0);

  const fs::path empty = scratch_dir() / "empty.jsonl";
  write_file(empty, "");
  const fs::path config = scratch_dir() / "train-empty.json";
  write_file(config, kRunConfig);
  const CommandResult no_data =
      run_cli("train --config " + config.string() + " --data " + empty.string() +
              " --out " + (scratch_dir() / "empty-out").string());
  CHECK(no_data.exit_code == 3);
}

TEST_CASE("synth, train, evaluate, and inspect-attention chain together") {
  const fs::path spec = scratch_dir() / "spec.json";
  const fs::path config = scratch_dir() / "run.json";
  const fs::path data = scratch_dir() / "data.jsonl";
  const fs::path out_dir = scratch_dir() / "run-out";
  write_file(spec, kSynthSpec);
  write_file(config, kRunConfig);

  const CommandResult synth =
      run_cli("synth --spec " + spec.string() + " --out " + data.string());
  CHECK(synth.exit_code == 0);
  CHECK(synth.output.find("60 samples") != std::string::npos);

  const CommandResult train = run_cli("train --config " + config.string() + " --data " +
                                      data.string() + " --out " + out_dir.string());
  CHECK(train.exit_code == 0);
  CHECK(train.output.find("fold 1/1") != std::string::npos);
  CHECK(fs::exists(out_dir / "checkpoint.json"));

  const std::string metrics = read_file(out_dir / "metrics.csv");
  CHECK(metrics.rfind("epoch,split,loss,oa,miou\n", 0) == 0);
  CHECK(metrics.find("\n1,train,") != std::string::npos);
  CHECK(metrics.find("\n1,val,") != std::string::npos);

  const fs::path eval_file = scratch_dir() / "eval.txt";
  const CommandResult eval =
      run_cli("evaluate --checkpoint " + (out_dir / "checkpoint.json").string() +
              " --data " + data.string() + " --out " + eval_file.string());
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.find("oa: ") != std::string::npos);
  CHECK(eval.output.find("miou: ") != std::string::npos);
  CHECK(eval.output.find("confusion:") != std::string::npos);
  CHECK(read_file(eval_file) == eval.output);

  const fs::path masks = scratch_dir() / "masks.csv";
  const CommandResult inspect =
      run_cli("inspect-attention --checkpoint " + (out_dir / "checkpoint.json").string() +
              " --data " + data.string() + " --out " + masks.string());
  CHECK(inspect.exit_code == 0);

  const auto rows = parse_csv(read_file(masks));
  REQUIRE(rows.size() == 1 + 3 * 2);  // header + classes x heads
  CHECK(rows[0][0] == "class");
  CHECK(rows[0][1] == "head");
  CHECK(rows[0].size() == 2 + 8);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 2; c < rows[r].size(); ++c) sum += std::stod(rows[r][c]);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("every command is byte-reproducible given the same seed") {
  const fs::path spec = scratch_dir() / "repro-spec.json";
  const fs::path config = scratch_dir() / "repro-run.json";
  write_file(spec, kSynthSpec);
  write_file(config, kRunConfig);

  const fs::path data_a = scratch_dir() / "repro-a.jsonl";
  const fs::path data_b = scratch_dir() / "repro-b.jsonl";
  CHECK(run_cli("synth --spec " + spec.string() + " --out " + data_a.string()).exit_code == 0);
  CHECK(run_cli("synth --spec " + spec.string() + " --out " + data_b.string()).exit_code == 0);
  CHECK(read_file(data_a) == read_file(data_b));

  const fs::path out_a = scratch_dir() / "repro-out-a";
  const fs::path out_b = scratch_dir() / "repro-out-b";
  const std::string train_tail =
      " --data " + data_a.string() + " --epochs 5 --config " + config.string();
  CHECK(run_cli("train --out " + out_a.string() + train_tail).exit_code == 0);
  CHECK(run_cli("train --out " + out_b.string() + train_tail).exit_code == 0);
  CHECK(read_file(out_a / "metrics.csv") == read_file(out_b / "metrics.csv"));
  CHECK(read_file(out_a / "checkpoint.json") == read_file(out_b / "checkpoint.json"));
}

TEST_CASE("cross-validation writes one metric log per fold") {
  const fs::path spec = scratch_dir() / "cv-spec.json";
  const fs::path config = scratch_dir() / "cv-run.json";
  const fs::path data = scratch_dir() / "cv.jsonl";
  const fs::path out_dir = scratch_dir() / "cv-out";
  write_file(spec, kSynthSpec);
  write_file(config, kRunConfig);
  REQUIRE(run_cli("synth --spec " + spec.string() + " --out " + data.string()).exit_code == 0);

  const CommandResult cv = run_cli("train --config " + config.string() + " --data " +
                                   data.string() + " --out " + out_dir.string() +
                                   " --epochs 4 --folds 3");
  CHECK(cv.exit_code == 0);
  CHECK(cv.output.find("fold 1/3") != std::string::npos);
  CHECK(cv.output.find("fold 3/3") != std::string::npos);
  CHECK(cv.output.find("cv_mean_val_oa=") != std::string::npos);
  CHECK(fs::exists(out_dir / "metrics_fold1.csv"));
  CHECK(fs::exists(out_dir / "metrics_fold2.csv"));
  CHECK(fs::exists(out_dir / "metrics_fold3.csv"));
  CHECK(fs::exists(out_dir / "checkpoint.json"));
}

TEST_CASE("a model trained to memorize ten samples evaluates at full accuracy") {
  const fs::path spec = scratch_dir() / "memo-spec.json";
  write_file(spec, R"({
    "num_classes": 2, "seq_len": 8, "channels": 6, "samples_per_class": 5,
    "event_centers": [60, 240], "event_width": 30, "noise": 0.3,
    "payload": "embeddings", "seed": 12
  })");
  const fs::path config = scratch_dir() / "memo-run.json";
  write_file(config, R"({
    "pipeline": {
      "spatial": {"channels": 6, "pixel_mlp": [6, 4], "pooled_mlp": [8, 6]},
      "temporal": "ltae",
      "ltae": {"input_dim": 6, "seq_len": 8, "num_heads": 2, "key_dim": 3,
               "mlp_widths": [6, 6]},
      "decoder_widths": [6, 8, 2],
      "num_classes": 2,
      "seed": 3
    },
    "training": {"epochs": 400, "batch_size": 2, "learning_rate": 0.005,
                 "optimizer": "adam", "seed": 7, "val_fraction": 0.0}
  })");

  const fs::path data = scratch_dir() / "memo.jsonl";
  const fs::path out_dir = scratch_dir() / "memo-out";
  REQUIRE(run_cli("synth --spec " + spec.string() + " --out " + data.string()).exit_code == 0);
  REQUIRE(run_cli("train --config " + config.string() + " --data " + data.string() +
                  " --out " + out_dir.string())
              .exit_code == 0);

  const CommandResult eval =
      run_cli("evaluate --checkpoint " + (out_dir / "checkpoint.json").string() +
              " --data " + data.string());
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.find("oa: 1.000000") != std::string::npos);
}
