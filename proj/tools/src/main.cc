// Copyright 2026 The detspace Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// detspace: run, record, replay, selfcheck and benchmark guest programs.
//
// Exit codes: 0 success, 1 guest failure, 2 determinism violation,
// 3 usage or configuration error.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "detspace/assembler.h"
#include "detspace/digest.h"
#include "detspace/fs.h"
#include "detspace/tools/corpus.h"
#include "detspace/tools/runner.h"

namespace {

using namespace detspace;
using namespace detspace::tools;

#ifdef DETSPACE_TEST_BACKDOOR
constexpr bool kTestBackdoor = true;  // test builds only: adds `nondet`
#else
constexpr bool kTestBackdoor = false;
#endif

constexpr int kOk = 0, kGuestFailure = 1, kNondeterminism = 2, kUsage = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  return {std::istream_iterator<std::string>(in), {}};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void spill(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw UsageError("cannot write '" + path + "'");
}

// Flags shared by run, record, replay and selfcheck.
struct RunFlags {
  std::string config_file;
  std::vector<std::string> command;
  std::vector<std::string> jobs;
  std::vector<std::string> files;
  std::string executor = "serial";
  RunConfig cfg;

  void add_to(CLI::App* app, bool with_command = true) {
    app->add_option("--config", config_file, "JSON run config (flags below override it)");
    if (with_command) app->add_option("command", command, "job: program and arguments");
    app->add_option("--job", jobs, "additional job, as one quoted command line");
    app->add_option("--input", cfg.input_log, "recorded input log");
    app->add_option("--file", files, "initial file GUEST=HOST");
    app->add_option("--console-in", cfg.console_in, "console input bytes");
    app->add_option("--vm", cfg.vm_files, "VM program (.s or .bin), named by file stem");
    app->add_option("--executor", executor, "serial or parallel")
        ->check(CLI::IsMember({"serial", "parallel"}));
    app->add_option("--seed", cfg.seed, "parallel executor seed");
    app->add_option("--workers", cfg.workers, "parallel executor threads")
        ->check(CLI::Range(1u, 64u));
    app->add_option("--max-slice", cfg.max_slice, "VM instructions per scheduling slice")
        ->check(CLI::Range(1u, 1u << 30));
    app->add_option("--nodes", cfg.nodes, "simulated cluster size")->check(CLI::Range(1u, 32u));
    app->add_option("--quantum", cfg.quantum, "dsched quantum in instructions");
    app->add_option("--fs-size", cfg.fs_size, "file system region bytes");
    app->add_flag("--debug-console", cfg.debug_console,
                  "immediate debug lines on stderr (never part of the output)");
    app->add_flag("--messages", cfg.message_trace, "print the cluster message trace");
  }

  RunConfig resolve(const CLI::App* app) const {
    RunConfig c = cfg;
    if (!config_file.empty()) {
      RunConfig base = RunConfig::from_json(slurp(config_file));
      // Only flags given on the command line override the file.
      auto given = [&](const char* name) { return app->count(name) > 0; };
      if (!given("--input")) c.input_log = base.input_log;
      if (!given("--console-in")) c.console_in = base.console_in;
      if (!given("--vm")) c.vm_files = base.vm_files;
      if (!given("--executor")) c.executor = base.executor;
      if (!given("--seed")) c.seed = base.seed;
      if (!given("--workers")) c.workers = base.workers;
      if (!given("--max-slice")) c.max_slice = base.max_slice;
      if (!given("--nodes")) c.nodes = base.nodes;
      if (!given("--quantum")) c.quantum = base.quantum;
      if (!given("--fs-size")) c.fs_size = base.fs_size;
      if (!given("--debug-console")) c.debug_console = base.debug_console;
      if (!given("--messages")) c.message_trace = base.message_trace;
      c.jobs = base.jobs;
      c.files = base.files;
    }
    if (app->count("--executor") || config_file.empty())
      c.executor = executor == "parallel" ? ExecutorKind::kParallel : ExecutorKind::kSerial;
    if (!command.empty()) c.jobs.push_back(command);
    for (const std::string& j : jobs) {
      std::vector<std::string> argv = split_words(j);
      if (argv.empty()) throw UsageError("empty --job");
      c.jobs.push_back(argv);
    }
    for (const std::string& f : files) {
      size_t eq = f.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--file expects GUEST=HOST");
      c.files.emplace_back(f.substr(0, eq), f.substr(eq + 1));
    }
    return c;
  }
};

RunReport execute(const RunConfig& cfg, const InputLog& input) {
  ProgramTable programs = build_programs(cfg, kTestBackdoor);
  return run_config(cfg, programs, input);
}

int guest_status(const RunReport& r) {
  return r.result.termination == Termination::kExit && r.result.exit_code == 0 ? kOk
                                                                                : kGuestFailure;
}

void print_messages(const RunReport& r) {
  if (r.config.message_trace) std::cerr << format_trace(r.result.messages);
}

void emit_report(const RunReport& r, const std::string& path) {
  if (path.empty())
    std::cerr << r.text();
  else
    spill(path, r.text());
}

int cmd_run(const RunFlags& f, const CLI::App* app, const std::string& report_path) {
  RunConfig cfg = f.resolve(app);
  if (cfg.jobs.empty() && cfg.input_log.empty()) throw UsageError("nothing to run");
  RunReport r = execute(cfg, build_input(cfg));
  std::cout << r.console << std::flush;
  print_messages(r);
  emit_report(r, report_path);
  return guest_status(r);
}

int cmd_record(const RunFlags& f, const CLI::App* app, const std::string& input_out,
               const std::string& output_out, const std::string& report_path) {
  RunConfig cfg = f.resolve(app);
  if (cfg.jobs.empty() && cfg.input_log.empty()) throw UsageError("nothing to run");
  InputLog input = build_input(cfg);
  input.save(input_out);
  RunReport r = execute(cfg, input);
  if (!output_out.empty()) r.result.output.save(output_out);
  std::cout << r.console << std::flush;
  emit_report(r, report_path);
  return guest_status(r);
}

int cmd_replay(const RunFlags& f, const CLI::App* app, const std::string& log,
               const std::string& expect, const std::string& report_path) {
  RunConfig cfg = f.resolve(app);
  cfg.input_log = log;
  RunReport r = execute(cfg, build_input(cfg));
  std::cout << r.console << std::flush;
  emit_report(r, report_path);
  if (!expect.empty()) {
    std::string want = SystemOutput::load(expect).encode(), got = r.result.output.encode();
    size_t at = first_difference(want, got);
    if (at != std::string_view::npos) {
      std::cerr << "replay: output differs from " << expect << " at offset " << at << "\n";
      return kNondeterminism;
    }
    std::cerr << "replay: output matches " << expect << "\n";
  }
  return guest_status(r);
}

std::vector<uint32_t> parse_node_list(const std::string& text) {
  std::vector<uint32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
    }
    if (used == 0 || used != item.size() || v == 0)
      throw UsageError("bad node count '" + item + "'");
    out.push_back(uint32_t(v));
  }
  return out;
}

int cmd_selfcheck(const RunFlags& f, const CLI::App* app, uint32_t runs,
                  const std::vector<uint32_t>& nodes) {
  RunConfig cfg = f.resolve(app);
  if (cfg.jobs.empty() && cfg.input_log.empty()) throw UsageError("nothing to run");
  ProgramTable programs = build_programs(cfg, kTestBackdoor);
  SelfcheckResult res = selfcheck(cfg, programs, runs, nodes);
  std::cout << res.text();
  if (!res.pass) return kNondeterminism;
  RunReport r = run_config(cfg, programs, build_input(cfg));
  return guest_status(r);
}

struct BenchFlags {
  std::string name;
  uint32_t size = 0;
  uint32_t threads = 1;
  uint32_t nodes = 1;
  uint32_t seed = 1;
  std::string word;
  std::string pattern = "random";
  std::string executor = "serial";
};

int cmd_bench(const BenchFlags& b) {
  RunConfig cfg;
  cfg.nodes = b.nodes;
  cfg.executor = b.executor == "parallel" ? ExecutorKind::kParallel : ExecutorKind::kSerial;
  std::string threads = std::to_string(b.threads), seed = std::to_string(b.seed);
  std::string word;
  uint32_t size = b.size;
  if (b.name == "md5") {
    if (!size) size = 4;
    word = b.word.empty() ? std::string(size, 'z') : b.word;
    cfg.jobs.push_back({"md5search", to_hex(md5(word)), std::to_string(size), threads});
  } else if (b.name == "md5tree") {
    if (!size) size = 4;
    word = b.word.empty() ? std::string(size, 'z') : b.word;
    uint32_t depth = 0;
    while ((1u << depth) < b.threads) ++depth;
    cfg.jobs.push_back({"md5tree", to_hex(md5(word)), std::to_string(size),
                        std::to_string(depth)});
  } else if (b.name == "matmult") {
    if (!size) size = 64;
    cfg.jobs.push_back({"matmult", std::to_string(size), threads, seed});
  } else if (b.name == "qsort") {
    if (!size) size = 10000;
    cfg.jobs.push_back({"qsort", std::to_string(size), threads, seed, b.pattern});
  } else {
    throw UsageError("unknown benchmark '" + b.name + "' (md5, md5tree, matmult, qsort)");
  }
  RunReport r = execute(cfg, build_input(cfg));
  FsImage fs = r.fs.empty() ? FsImage(0) : FsImage::parse(r.fs, cfg.fs_size);

  // Independent checks of the result.
  std::string check = "ok";
  std::string out;
  if (b.name == "md5" || b.name == "md5tree") {
    if (fs.read(kMd5Out, out) != FsError::kOk || md5(out) != md5(word)) check = "FAILED";
  } else if (b.name == "matmult") {
    std::vector<uint32_t> a = lcg_values(b.seed, size_t(size) * size);
    std::vector<uint32_t> m = lcg_values(b.seed + 1, size_t(size) * size);
    std::string want(size_t(size) * size * 4, '\0');
    for (uint32_t i = 0; i < size; ++i)
      for (uint32_t j = 0; j < size; ++j) {
        uint32_t acc = 0;
        for (uint32_t k = 0; k < size; ++k) acc += a[i * size + k] * m[k * size + j];
        for (int q = 0; q < 4; ++q) want[4 * (i * size + j) + q] = char(uint8_t(acc >> (8 * q)));
      }
    if (fs.read(kMatmultOut, out) != FsError::kOk || out != want) check = "FAILED";
  } else {
    std::vector<uint32_t> v = qsort_input(b.pattern, size, b.seed);
    std::sort(v.begin(), v.end());
    std::string want(v.size() * 4, '\0');
    for (size_t i = 0; i < v.size(); ++i)
      for (int q = 0; q < 4; ++q) want[4 * i + q] = char(uint8_t(v[i] >> (8 * q)));
    if (fs.read(kQsortOut, out) != FsError::kOk || out != want) check = "FAILED";
  }
  std::string line = r.console.substr(0, r.console.find('\n'));
  std::printf("bench %s size=%u threads=%u nodes=%u wall_ms=%.1f output_sha256=%s check=%s\n",
              b.name.c_str(), size, b.threads, b.nodes, r.wall_ms, r.output_sha256().c_str(),
              check.c_str());
  std::printf("result %s\n", line.c_str());
  if (check != "ok") return kGuestFailure;
  return guest_status(r);
}

int cmd_asm(const std::string& in, const std::string& out, bool symbols) {
  AsmProgram p;
  try {
    p = assemble(slurp(in));
  } catch (const AsmError& e) {
    std::cerr << in << ": " << e.what() << "\n";
    return kGuestFailure;
  }
  if (p.entry != p.base)
    std::cerr << "note: entry 'start' is not at the base; a .bin file runs from the base\n";
  spill(out, std::string_view(reinterpret_cast<const char*>(p.code.data()), p.code.size()));
  if (symbols)
    for (auto& [name, addr] : p.symbols) std::printf("%08x %s\n", addr, name.c_str());
  return kOk;
}

int cmd_disasm(const std::string& in) {
  std::string bytes = slurp(in);
  std::vector<uint8_t> code(bytes.begin(), bytes.end());
  std::cout << disassemble(code);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic space kernel: run, record, replay and check guest programs"};
  app.require_subcommand(1);

  RunFlags run_flags;
  std::string report_path;
  CLI::App* run = app.add_subcommand("run", "run jobs under init and print the console");
  run_flags.add_to(run);
  run->add_option("--report", report_path, "write the report here instead of stderr");

  RunFlags rec_flags;
  std::string input_out, output_out;
  CLI::App* rec = app.add_subcommand("record", "run and save the input (and output) log");
  rec_flags.add_to(rec);
  rec->add_option("-o,--save-input", input_out, "input log to write")->required();
  rec->add_option("--save-output", output_out, "output log to write");
  rec->add_option("--report", report_path, "write the report here instead of stderr");

  RunFlags rep_flags;
  std::string replay_log, expect;
  CLI::App* rep = app.add_subcommand("replay", "rerun a recorded input log");
  rep_flags.add_to(rep, false);
  rep->add_option("log", replay_log, "input log")->required();
  rep->add_option("--expect", expect, "saved output log to compare against");
  rep->add_option("--report", report_path, "write the report here instead of stderr");

  RunFlags chk_flags;
  uint32_t runs = 5;
  std::string node_list;
  CLI::App* chk = app.add_subcommand("selfcheck", "run repeatedly and compare every output");
  chk_flags.add_to(chk);
  chk->add_option("--runs", runs, "runs per node count: serial plus parallel seeds")
      ->check(CLI::Range(2u, 1000u));
  chk->add_option("--node-counts", node_list, "cluster sizes to cover, comma separated");

  BenchFlags bench_flags;
  CLI::App* bench = app.add_subcommand("bench", "time a benchmark and check its result");
  bench->add_option("name", bench_flags.name, "md5, md5tree, matmult or qsort")->required();
  bench->add_option("--size", bench_flags.size, "md5: max length; matmult: n; qsort: n");
  bench->add_option("--threads", bench_flags.threads, "threads (md5tree: leaves)")
      ->check(CLI::Range(1u, 64u));
  bench->add_option("--nodes", bench_flags.nodes, "simulated cluster size")
      ->check(CLI::Range(1u, 32u));
  bench->add_option("--seed", bench_flags.seed, "input seed");
  bench->add_option("--word", bench_flags.word, "md5: the string whose hash is searched");
  bench->add_option("--pattern", bench_flags.pattern, "qsort input")
      ->check(CLI::IsMember({"random", "sorted", "reverse", "constant"}));
  bench->add_option("--executor", bench_flags.executor, "serial or parallel")
      ->check(CLI::IsMember({"serial", "parallel"}));

  std::string asm_in, asm_out;
  bool asm_symbols = false;
  CLI::App* as = app.add_subcommand("asm", "assemble a VM program to a flat image");
  as->add_option("source", asm_in, "assembly source")->required();
  as->add_option("-o,--output", asm_out, "image to write")->required();
  as->add_flag("--symbols", asm_symbols, "print the symbol table");

  std::string disasm_in;
  CLI::App* dis = app.add_subcommand("disasm", "disassemble a flat image");
  dis->add_option("image", disasm_in, "image file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_flags, run, report_path);
    if (*rec) return cmd_record(rec_flags, rec, input_out, output_out, report_path);
    if (*rep) return cmd_replay(rep_flags, rep, replay_log, expect, report_path);
    if (*chk) return cmd_selfcheck(chk_flags, chk, runs, parse_node_list(node_list));
    if (*bench) return cmd_bench(bench_flags);
    if (*as) return cmd_asm(asm_in, asm_out, asm_symbols);
    if (*dis) return cmd_disasm(disasm_in);
  } catch (const std::exception& e) {
    // Bad flags, unreadable files, malformed logs and VM sources.
    std::cerr << "detspace: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
