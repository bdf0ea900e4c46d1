// Copyright 2026 The gazecheck Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// gazecheck command-line tool.
//
// Exit codes: 0 success, 2 verification completed with mismatches, 1 error.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gazecheck/bench.hpp"
#include "gazecheck/datagen.hpp"
#include "gazecheck/encode.hpp"
#include "gazecheck/error.hpp"
#include "gazecheck/log.hpp"
#include "gazecheck/psi_dh.hpp"
#include "gazecheck/session.hpp"
#include "gazecheck/transport.hpp"
#include "gazecheck/verify.hpp"

using namespace gazecheck;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitMismatch = 2;

std::atomic<bool> g_stop{false};

std::string g_command_line;

struct EncodingFlags {
  std::string channel = "gaze";
  std::uint64_t seed = 1;
  std::size_t bits = kDefaultDigestBits;
  double gaze_tol = 3.0;
  double pose_tol = 5.0;

  void add(CLI::App* app) {
    app->add_option("--channel", channel, "gaze | pose | both")->check(CLI::IsMember({"gaze", "pose", "both"}));
    app->add_option("--seed", seed, "LSH basis seed (both parties must agree)");
    app->add_option("--bits", bits, "digest width");
    app->add_option("--gaze-tol", gaze_tol, "gaze tolerance in degrees");
    app->add_option("--pose-tol", pose_tol, "pose tolerance in degrees");
  }

  SessionParams params() const {
    SessionParams p;
    p.channel = parse_channel(channel);
    p.lsh_seed = seed;
    p.bits = static_cast<std::uint16_t>(bits);
    p.gaze_tol_deg = gaze_tol;
    p.pose_tol_deg = pose_tol;
    return p;
  }
};

std::string header() { return "gazecheck " + g_command_line; }

bool is_digest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    return line.find("\"meta\"") != std::string::npos;
  }
  return false;
}

/// Digest file as-is, or a dataset encoded with `meta`.
struct Loaded {
  DigestFile digests;
  std::optional<Dataset> dataset;
};

Loaded load(const std::string& path, const EncodingMeta& meta) {
  Loaded l;
  if (is_digest_file(path)) {
    l.digests = read_digest_file(path);
    log(LogLevel::Info, "loaded " + std::to_string(l.digests.records.size()) + " digests from " + path);
    return l;
  }
  l.dataset = read_dataset_file(path);
  l.digests.meta = meta;
  l.digests.records = encode_dataset(*l.dataset, ChannelEncoder(meta.channel, meta.lsh), meta.tolerances);
  log(LogLevel::Info, "encoded " + std::to_string(l.digests.records.size()) + " records from " + path);
  return l;
}

void require_meta(const DigestFile& f, const EncodingMeta& meta, const std::string& path) {
  if (!(f.meta == meta)) fail(ErrorCode::BasisMismatch, path + " was encoded with other parameters");
}

std::set<std::string> truth_set(const std::string& mask_path, const Loaded& owner, Channel channel,
                                const ToleranceConfig& tol) {
  if (mask_path.empty()) return {};
  CorruptionMask mask = read_mask_file(mask_path);
  if (owner.dataset) return effective_corruptions(*owner.dataset, mask, channel, tol);
  return mask.ids();
}

int write_report(const VerificationReport& r, const std::string& out_path) {
  std::ostringstream text;
  write_report_text(text, r, header());
  if (out_path.empty()) {
    std::cout << text.str();
  } else {
    std::ofstream out(out_path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + out_path);
    out << text.str();
    std::ofstream(out_path + ".json") << report_json(r) << '\n';
    std::cout << "matched " << r.matched_elements << ", compliant " << r.compliant_cardinality
              << ", non-compliant " << r.non_compliant_cardinality << "; report written to " << out_path
              << '\n';
  }
  return r.non_compliant_cardinality > 0 ? kExitMismatch : kExitOk;
}

void on_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) g_command_line += (i > 1 ? " " : "") + std::string(argv[i]);

  CLI::App app{"Private verification of gaze/pose label consistency"};
  app.require_subcommand(1);

  // datagen
  auto* gen = app.add_subcommand("datagen", "generate a synthetic dataset");
  GenConfig gc;
  std::string gen_out, gen_from, gen_mask, gen_mode = "label-noise";
  double gen_overlap = 0.5;
  gen->add_option("--n", gc.n, "number of records")->required();
  gen->add_option("--seed", gc.seed, "generator seed");
  gen->add_option("--participants", gc.participants, "participant count");
  gen->add_option("--from", gen_from, "plant an overlap with this reference dataset");
  gen->add_option("--overlap", gen_overlap, "fraction copied from --from");
  gen->add_option("--corrupt", gc.corruption_fraction, "fraction of records to corrupt");
  gen->add_option("--corruption-mode", gen_mode, "label-noise | label-swap | feature-noise");
  gen->add_option("--mask", gen_mask, "write the corruption mask here");
  gen->add_option("--gaze-tol", gc.tolerances.gaze_tol_deg, "gaze tolerance (corruption magnitude)");
  gen->add_option("--pose-tol", gc.tolerances.pose_tol_deg, "pose tolerance (corruption magnitude)");
  gen->add_option("--out", gen_out, "output dataset file")->required();

  // encode
  auto* enc = app.add_subcommand("encode", "hash a dataset into a digest file");
  EncodingFlags enc_flags;
  std::string enc_in, enc_out;
  enc_flags.add(enc);
  enc->add_option("--dataset", enc_in, "dataset file")->required();
  enc->add_option("--out", enc_out, "digest file")->required();

  // verify-local
  auto* vl = app.add_subcommand("verify-local", "find equal digests with conflicting labels");
  EncodingFlags vl_flags;
  std::string vl_in, vl_out;
  vl_flags.add(vl);
  vl->add_option("--dataset", vl_in, "dataset or digest file")->required();
  vl->add_option("--out", vl_out, "report file");

  // verify-public
  auto* vp = app.add_subcommand("verify-public", "plaintext comparison against a reference");
  EncodingFlags vp_flags;
  std::string vp_owner, vp_ref, vp_mask, vp_out;
  vp_flags.add(vp);
  vp->add_option("--dataset", vp_owner, "owner dataset or digest file")->required();
  vp->add_option("--reference", vp_ref, "reference dataset or digest file")->required();
  vp->add_option("--mask", vp_mask, "corruption mask for scoring");
  vp->add_option("--out", vp_out, "report file");

  // publish
  auto* pub = app.add_subcommand("publish", "build a V3 published reference set");
  EncodingFlags pub_flags;
  std::string pub_ref, pub_out, pub_keys, pub_group = "p256";
  pub_flags.add(pub);
  pub->add_option("--reference", pub_ref, "reference dataset or digest file")->required();
  pub->add_option("--group", pub_group, "p256 | modp3072");
  pub->add_option("--out", pub_out, "published set file")->required();
  pub->add_option("--keys-out", pub_keys, "reference key file (keep private)")->required();

  // serve
  auto* srv = app.add_subcommand("serve", "serve the reference endpoint");
  EncodingFlags srv_flags;
  std::string srv_ref, srv_host = "127.0.0.1", srv_pub, srv_keys, srv_group = "p256", srv_delivery = "owner";
  std::vector<std::string> srv_versions;
  std::uint16_t srv_port = 7400;
  std::size_t srv_max = 0;
  bool srv_no_reveal = false;
  double srv_timeout = 60;
  srv_flags.add(srv);
  srv->add_option("--reference", srv_ref, "reference dataset or digest file")->required();
  srv->add_option("--host", srv_host, "bind address");
  srv->add_option("--port", srv_port, "bind port (0 picks one)");
  srv->add_option("--version", srv_versions, "accepted versions (default all)");
  srv->add_option("--group", srv_group, "p256 | modp3072");
  srv->add_option("--published-set", srv_pub, "V3 published set file");
  srv->add_option("--published-keys", srv_keys, "key file matching --published-set");
  srv->add_option("--result-delivery", srv_delivery, "owner | both");
  srv->add_flag("--no-reveal", srv_no_reveal, "refuse sessions requesting label reveal");
  srv->add_option("--max-sessions", srv_max, "exit after this many sessions (0 = run until signalled)");
  srv->add_option("--timeout", srv_timeout, "per-read timeout in seconds");

  // run
  auto* run = app.add_subcommand("run", "verify a dataset against a serving reference");
  EncodingFlags run_flags;
  std::string run_owner, run_host = "127.0.0.1", run_version = "v1", run_group = "p256",
                         run_delivery = "owner", run_mask, run_out;
  std::uint16_t run_port = 7400;
  bool run_reveal = false;
  double run_timeout = 60;
  run_flags.add(run);
  run->add_option("--dataset", run_owner, "owner dataset or digest file")->required();
  run->add_option("--host", run_host, "reference host");
  run->add_option("--port", run_port, "reference port");
  run->add_option("--version", run_version, "v0 | v1 | v2 | v3 | v4");
  run->add_option("--group", run_group, "p256 | modp3072");
  run->add_flag("--reveal-correct-label", run_reveal, "learn the reference label of mismatches");
  run->add_option("--result-delivery", run_delivery, "owner | both");
  run->add_option("--mask", run_mask, "corruption mask for scoring");
  run->add_option("--timeout", run_timeout, "per-read timeout in seconds");
  run->add_option("--out", run_out, "report file");

  // bench
  auto* bench = app.add_subcommand("bench", "runtime comparison across versions and sizes");
  std::vector<std::size_t> bench_sizes;
  std::vector<std::string> bench_versions{"v0", "v1", "v2", "v3", "v4"};
  BenchConfig bc;
  std::string bench_out, bench_group = "p256", bench_channel = "gaze";
  bool bench_calibrate = false;
  bench->add_option("--sizes", bench_sizes, "dataset sizes, powers of two (default 2^8..2^16)")->delimiter(',');
  bench->add_option("--versions", bench_versions, "versions to run")->delimiter(',');
  bench->add_option("--reps", bc.repetitions, "repetitions per cell");
  bench->add_option("--seed", bc.seed, "data seed");
  bench->add_option("--group", bench_group, "p256 | modp3072");
  bench->add_option("--channel", bench_channel, "gaze | pose | both");
  bench->add_flag("--large", bc.allow_large, "allow sizes above 2^16");
  bench->add_flag("--calibrate", bench_calibrate, "also report calibrated bits for 0.05 at 3 degrees");
  bench->add_option("--out", bench_out, "table file (a .json twin is written next to it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  const bool log_from_env = std::getenv("QEYE_LOG") != nullptr;
  try {
    if (*gen) {
      gc.corruption_mode = parse_corruption_mode(gen_mode);
      Dataset ds;
      if (!gen_from.empty()) {
        Dataset ref = read_dataset_file(gen_from);
        GenConfig fresh = gc;
        fresh.n = ref.size();
        ds = plant_overlap(ref, gen_overlap, gc.seed, fresh).owner;
      } else {
        ds = gen_dataset(gc);
      }
      if (gc.corruption_fraction > 0) {
        auto [corrupted, mask] = corrupt(ds, gc);
        ds = std::move(corrupted);
        if (!gen_mask.empty()) write_mask_file(gen_mask, mask);
        std::cout << "corrupted " << mask.size() << " records\n";
      }
      write_dataset_file(gen_out, ds, header());
      std::cout << "wrote " << ds.size() << " records to " << gen_out << '\n';
      return kExitOk;
    }

    if (*enc) {
      const EncodingMeta meta = enc_flags.params().encoding();
      DigestFile f{meta, encode_dataset(read_dataset_file(enc_in), ChannelEncoder(meta.channel, meta.lsh),
                                        meta.tolerances)};
      write_digest_file(enc_out, f, header());
      std::cout << "wrote " << f.records.size() << " digests to " << enc_out << '\n';
      return kExitOk;
    }

    if (*vl) {
      const EncodingMeta meta = vl_flags.params().encoding();
      const Loaded l = load(vl_in, meta);
      const ConsistencyReport r = verify_local(l.digests.records);
      std::ostringstream text;
      text << "# " << header() << '\n';
      write_consistency_text(text, r);
      if (vl_out.empty()) {
        std::cout << text.str();
      } else {
        std::ofstream(vl_out) << text.str();
        std::cout << r.conflicting_pairs.size() << " conflicting pairs; report written to " << vl_out << '\n';
      }
      return r.conflicting_pairs.empty() ? kExitOk : kExitMismatch;
    }

    if (*vp) {
      const EncodingMeta meta = vp_flags.params().encoding();
      const Loaded owner = load(vp_owner, meta);
      const Loaded ref = load(vp_ref, meta);
      VerificationReport r = verify_public(owner.digests, ref.digests);
      r = evaluate(r, truth_set(vp_mask, owner, owner.digests.meta.channel, owner.digests.meta.tolerances));
      return write_report(r, vp_out);
    }

    if (*pub) {
      SessionParams p = pub_flags.params();
      p.group = parse_group_id(pub_group);
      const Loaded ref = load(pub_ref, p.encoding());
      require_meta(ref.digests, p.encoding(), pub_ref);
      const Group& g = group_for(p.group);
      const DhReferenceKeys keys = make_reference_keys(g);
      const auto set = publish_reference(dedup(ref.digests.records).unique, keys, g, p.channel);
      write_published_set(pub_out, set);
      const Bytes kb = serialize_reference_keys(keys, p.group);
      std::ofstream kf(pub_keys, std::ios::binary);
      if (!kf) fail(ErrorCode::IoError, "cannot write " + pub_keys);
      kf.write(reinterpret_cast<const char*>(kb.data()), static_cast<std::streamsize>(kb.size()));
      std::cout << "published " << set.b.size() << " elements to " << pub_out << '\n';
      return kExitOk;
    }

    if (*srv) {
      if (!log_from_env) set_log_threshold(LogLevel::Info);
      SessionParams p = srv_flags.params();
      p.group = parse_group_id(srv_group);
      p.result_delivery = parse_result_delivery(srv_delivery);
      const Loaded ref = load(srv_ref, p.encoding());
      require_meta(ref.digests, p.encoding(), srv_ref);
      SessionOptions opt;
      opt.timeout = Millis(static_cast<long>(srv_timeout * 1000));
      opt.policy.allow_reveal = !srv_no_reveal;
      if (!srv_versions.empty()) {
        opt.policy.versions.clear();
        for (const auto& v : srv_versions) opt.policy.versions.insert(parse_version(v));
      }
      std::optional<PublishedReferenceSet> set;
      std::optional<DhReferenceKeys> keys;
      ReferenceResources res;
      if (!srv_pub.empty()) {
        if (srv_keys.empty()) fail(ErrorCode::InvalidArgument, "--published-set needs --published-keys");
        set = read_published_set(srv_pub);
        std::ifstream kf(srv_keys, std::ios::binary);
        if (!kf) fail(ErrorCode::IoError, "cannot open " + srv_keys);
        Bytes kb((std::istreambuf_iterator<char>(kf)), std::istreambuf_iterator<char>());
        keys = parse_reference_keys(kb, set->group);
        res = {&*set, &*keys};
      }
      TcpListener listener(srv_host, srv_port);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on " << srv_host << ":" << listener.port() << " (" << p.describe() << ")"
                << std::endl;
      serve(listener, p, ref.digests.records, opt, res, srv_max, &g_stop);
      return kExitOk;
    }

    if (*run) {
      if (!log_from_env) set_log_threshold(LogLevel::Info);
      SessionParams p = run_flags.params();
      p.version = parse_version(run_version);
      p.group = parse_group_id(run_group);
      p.result_delivery = parse_result_delivery(run_delivery);
      p.reveal_correct_label = run_reveal;
      const Loaded owner = load(run_owner, p.encoding());
      require_meta(owner.digests, p.encoding(), run_owner);
      SessionOptions opt;
      opt.timeout = Millis(static_cast<long>(run_timeout * 1000));
      auto conn = tcp_connect(run_host, run_port, opt.timeout);
      OwnerResult r = run_owner_session(p, owner.digests.records, *conn, opt);
      conn->close();
      std::cerr << "negotiated: " << r.params.describe() << "\n"
                << "online " << r.timings.online_ms << " ms, offline " << r.timings.offline_ms << " ms\n";
      VerificationReport rep = r.report;
      if (!rep.cardinality_only) rep = evaluate(rep, truth_set(run_mask, owner, p.channel, p.encoding().tolerances));
      return write_report(rep, run_out);
    }

    if (*bench) {
      bc.sizes = bench_sizes.empty() ? default_bench_sizes() : bench_sizes;
      bc.versions.clear();
      for (const auto& v : bench_versions) bc.versions.push_back(parse_version(v));
      bc.group = parse_group_id(bench_group);
      bc.channel = parse_channel(bench_channel);
      const auto results = run_bench(bc, [](const BenchResult& r) {
        std::cerr << to_string(r.version) << " n=" << r.dataset_size << " online " << r.online_ms << " ms\n";
      });
      std::ostringstream table;
      table << "# " << header() << '\n';
      table << "# group=" << to_string(bc.group) << " channel=" << to_string(bc.channel)
            << " reps=" << bc.repetitions << " seed=" << bc.seed << '\n';
      if (bench_calibrate) {
        table << "# calibrated bits (collision <= 0.05, tol 3 deg, 10^4 trials): "
              << calibrate_bits(0.05, 3.0, 10000) << '\n';
      }
      table << '\n';
      write_bench_table(table, results);
      std::cout << table.str();
      if (!bench_out.empty()) {
        std::ofstream(bench_out) << table.str();
        std::ofstream(bench_out + ".json") << bench_json(results) << '\n';
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}
