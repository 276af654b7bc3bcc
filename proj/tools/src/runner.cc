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

#include "detspace/tools/runner.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "detspace/assembler.h"
#include "detspace/digest.h"
#include "detspace/fs.h"
#include "detspace/proc.h"
#include "detspace/tools/corpus.h"

namespace detspace::tools {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

ExecutorKind executor_from(const std::string& s) {
  if (s == "serial") return ExecutorKind::kSerial;
  if (s == "parallel") return ExecutorKind::kParallel;
  throw std::invalid_argument("unknown executor '" + s + "'");
}

}  // namespace

std::string RunConfig::to_json() const {
  json j;
  j["jobs"] = jobs;
  j["input_log"] = input_log;
  json f = json::array();
  for (auto& [guest, host] : files) f.push_back({{"guest", guest}, {"host", host}});
  j["files"] = f;
  j["console_in"] = console_in;
  j["vm_files"] = vm_files;
  j["executor"] = to_string(executor);
  j["seed"] = seed;
  j["workers"] = workers;
  j["max_slice"] = max_slice;
  j["nodes"] = nodes;
  j["quantum"] = quantum;
  j["fs_size"] = fs_size;
  j["debug_console"] = debug_console;
  j["message_trace"] = message_trace;
  return j.dump();
}

RunConfig RunConfig::from_json(const std::string& text) {
  RunConfig c;
  try {
    json j = json::parse(text);
    c.jobs = j.at("jobs").get<std::vector<std::vector<std::string>>>();
    c.input_log = j.at("input_log").get<std::string>();
    for (auto& f : j.at("files"))
      c.files.emplace_back(f.at("guest").get<std::string>(), f.at("host").get<std::string>());
    c.console_in = j.at("console_in").get<std::string>();
    c.vm_files = j.at("vm_files").get<std::vector<std::string>>();
    c.executor = executor_from(j.at("executor").get<std::string>());
    c.seed = j.at("seed").get<uint64_t>();
    c.workers = j.at("workers").get<uint32_t>();
    c.max_slice = j.at("max_slice").get<uint32_t>();
    c.nodes = j.at("nodes").get<uint32_t>();
    c.quantum = j.at("quantum").get<uint64_t>();
    c.fs_size = j.at("fs_size").get<uint32_t>();
    c.debug_console = j.at("debug_console").get<bool>();
    c.message_trace = j.at("message_trace").get<bool>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad run config: ") + e.what());
  }
  return c;
}

KernelConfig RunConfig::kernel_config() const {
  KernelConfig k;
  k.executor = executor;
  k.seed = seed;
  k.workers = workers;
  k.max_slice = max_slice;
  k.cluster.nodes = nodes;
  k.quantum = quantum;
  k.fs_size = fs_size;
  if (debug_console) k.debug_console = &std::cerr;
  return k;
}

InputLog build_input(const RunConfig& cfg) {
  InputLog log;
  if (!cfg.input_log.empty()) log = InputLog::load(cfg.input_log);
  for (auto& [guest, host] : cfg.files) log.add(dev::kFile, file_record(guest, read_file(host)));
  if (!cfg.console_in.empty()) log.add(dev::kConsole, cfg.console_in);
  for (auto& job : cfg.jobs) log.add(dev::kArgs, args_record(job));
  return log;
}

ProgramTable build_programs(const RunConfig& cfg, bool test_backdoor) {
  CorpusOptions opts;
  opts.test_backdoor = test_backdoor;
  ProgramTable t = make_corpus(opts);
  for (const std::string& path : cfg.vm_files) {
    std::filesystem::path p(path);
    std::string name = p.stem().string();
    std::string bytes = read_file(path);
    if (p.extension() == ".bin") {
      AsmProgram prog;
      prog.code.assign(bytes.begin(), bytes.end());
      t.add_vm(name, std::move(prog));
    } else {
      t.add_vm_source(name, bytes);
    }
  }
  return t;
}

std::string RunReport::output_sha256() const { return sha256_hex(result.output.encode()); }

std::string RunReport::normative_text() const {
  std::ostringstream os;
  os << "detspace-report 1\n";
  os << "config " << config.to_json() << "\n";
  os << "termination " << to_string(result.termination) << "\n";
  os << "exit_code " << result.exit_code << "\n";
  if (result.termination == Termination::kTrap) os << "trap " << to_string(result.trap) << "\n";
  if (!result.error.empty()) os << "error " << result.error << "\n";
  for (const Record& r : result.output.records())
    if (r.device == dev::kStatus) os << "status " << r.bytes << "\n";
  os << "console_bytes " << console.size() << "\n";
  os << "console_sha256 " << sha256_hex(console) << "\n";
  os << "fs_sha256 " << sha256_hex(fs) << "\n";
  os << "traces_sha256 " << sha256_hex(traces) << "\n";
  os << "output_sha256 " << output_sha256() << "\n";
  const MessageCounts& m = result.message_counts;
  os << "messages migrate=" << m.migrate << " page_request=" << m.page_request
     << " page_reply=" << m.page_reply << "\n";
  os << "state_sha256 " << result.state_hash << "\n";
  return os.str();
}

std::string RunReport::text() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "wall_ms %.3f\n", wall_ms);
  return normative_text() + buf;
}

RunReport run_config(const RunConfig& cfg, const ProgramTable& programs,
                     const InputLog& input) {
  RunReport rep;
  rep.config = cfg;
  KernelConfig k = cfg.kernel_config();
  auto t0 = std::chrono::steady_clock::now();
  rep.result = Kernel(k, programs).run("init", input);
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
  rep.console = rep.result.output.collect(dev::kConsoleOut);
  rep.fs = rep.result.output.collect(dev::kFsDump);
  if (!rep.fs.empty()) {
    FsImage fs = FsImage::parse(rep.fs, cfg.fs_size);
    for (const std::string& path : fs.list("/trace/")) {
      std::string content;
      fs.read(path, content);
      rep.traces += path + "\n" + content;
    }
  }
  return rep;
}

std::string SelfcheckVariant::label() const {
  std::string s = executor == ExecutorKind::kSerial ? "serial" : "parallel seed=" + std::to_string(seed);
  return s + " nodes=" + std::to_string(nodes);
}

size_t first_difference(std::string_view a, std::string_view b) {
  size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i)
    if (a[i] != b[i]) return i;
  return a.size() == b.size() ? std::string_view::npos : n;
}

std::string SelfcheckResult::text() const {
  std::ostringstream os;
  for (size_t i = 0; i < variants.size() && i < hashes.size(); ++i)
    os << "run " << i << " " << variants[i].label() << " output_sha256 " << hashes[i] << "\n";
  if (pass)
    os << "selfcheck PASS " << variants.size() << " runs\n";
  else
    os << "selfcheck FAIL " << diff << "\n";
  return os.str();
}

SelfcheckResult selfcheck(const RunConfig& cfg, const ProgramTable& programs, uint32_t runs,
                          const std::vector<uint32_t>& node_counts) {
  SelfcheckResult res;
  std::vector<uint32_t> nodes = node_counts;
  if (nodes.empty()) nodes.push_back(cfg.nodes);
  for (uint32_t n : nodes)
    for (uint32_t i = 0; i < runs; ++i)
      res.variants.push_back({i ? ExecutorKind::kParallel : ExecutorKind::kSerial, i, n});

  InputLog input = build_input(cfg);
  std::optional<RunReport> first;
  for (const SelfcheckVariant& v : res.variants) {
    RunConfig c = cfg;
    c.executor = v.executor;
    c.nodes = v.nodes;
    if (v.executor == ExecutorKind::kParallel) {
      c.seed = v.seed * 7919 + 13;
      c.workers = 3;
      c.max_slice = std::min<uint32_t>(cfg.max_slice, 1 + 97 * v.seed);
    }
    RunReport r = run_config(c, programs, input);
    res.hashes.push_back(r.output_sha256());
    if (!first) {
      first = std::move(r);
      continue;
    }
    struct Stream {
      const char* name;
      std::string a, b;
    };
    Stream streams[] = {
        {"SystemOutput", first->result.output.encode(), r.result.output.encode()},
        {"file system", first->fs, r.fs},
        {"sync traces", first->traces, r.traces},
        {"exit status", first->result.status_line(), r.result.status_line()},
    };
    for (const Stream& s : streams) {
      size_t at = first_difference(s.a, s.b);
      if (at == std::string_view::npos) continue;
      res.pass = false;
      res.diff = v.label() + ": " + s.name + " differs from " + res.variants[0].label() +
                 " at offset " + std::to_string(at);
      return res;
    }
  }
  return res;
}

}  // namespace detspace::tools
