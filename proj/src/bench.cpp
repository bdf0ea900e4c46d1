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

#include "gazecheck/bench.hpp"

#include <algorithm>
#include <bit>
#include <iomanip>
#include <map>
#include <new>
#include <ostream>
#include <sstream>
#include <thread>

#include "gazecheck/datagen.hpp"
#include "gazecheck/encode.hpp"
#include "gazecheck/error.hpp"
#include "gazecheck/log.hpp"
#include "gazecheck/rng.hpp"
#include "gazecheck/transport.hpp"
#include "json.hpp"

namespace gazecheck {

namespace {

struct Sample {
  double online_ms;
  double offline_ms;
  std::uint64_t sent;
  std::uint64_t received;
  std::size_t matches;
};

Sample run_once(const SessionParams& p, const std::vector<HashedRecord>& owner,
                const std::vector<HashedRecord>& reference) {
  auto [a, b] = make_duplex();
  std::exception_ptr ref_err;
  std::thread ref([&, t = b.get()] {
    try {
      run_reference_session(p, reference, *t, {});
    } catch (...) {
      ref_err = std::current_exception();
    }
    t->close();
  });
  OwnerResult r;
  std::exception_ptr own_err;
  try {
    r = run_owner_session(p, owner, *a, {});
  } catch (...) {
    own_err = std::current_exception();
  }
  a->close();
  ref.join();
  if (own_err) std::rethrow_exception(own_err);
  if (ref_err) std::rethrow_exception(ref_err);
  return {r.timings.online_ms, r.timings.offline_ms, a->bytes_sent(), a->bytes_received(),
          r.outcome.match_count};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<std::size_t> default_bench_sizes() {
  std::vector<std::size_t> s;
  for (std::size_t e = 8; e <= 16; ++e) s.push_back(std::size_t{1} << e);
  return s;
}

void validate_bench_config(const BenchConfig& cfg) {
  if (cfg.sizes.empty() || cfg.versions.empty()) fail(ErrorCode::InvalidArgument, "no sizes or versions");
  if (cfg.repetitions == 0) fail(ErrorCode::InvalidArgument, "repetitions must be positive");
  for (auto n : cfg.sizes) {
    if (!std::has_single_bit(n)) fail(ErrorCode::InvalidArgument, "size " + std::to_string(n) + " is not a power of two");
    if (n > kDefaultBenchCeiling && !cfg.allow_large) {
      fail(ErrorCode::OutOfMemory, "size " + std::to_string(n) +
                                       " exceeds the desk-scale ceiling 65536; each element holds several "
                                       "group elements per party, so pass --large and expect gigabytes of RAM");
    }
  }
}

std::vector<BenchResult> run_bench(const BenchConfig& cfg,
                                   const std::function<void(const BenchResult&)>& progress) {
  validate_bench_config(cfg);
  std::vector<BenchResult> out;
  try {
    for (auto n : cfg.sizes) {
      SessionParams p;
      p.channel = cfg.channel;
      p.group = cfg.group;
      p.lsh_seed = derive_seed(cfg.seed, 0x6c7368);
      GenConfig gc;
      gc.n = n;
      gc.seed = derive_seed(cfg.seed, 0x726566, n);
      Dataset ref = gen_dataset(gc);
      Dataset owner = plant_overlap(ref, cfg.overlap, derive_seed(cfg.seed, 0x6f776e, n), gc).owner;
      GenConfig cc = gc;
      cc.seed = derive_seed(cfg.seed, 0x636f72, n);
      cc.corruption_fraction = cfg.corruption_fraction;
      owner = corrupt(owner, cc).first;
      const EncodingMeta m = p.encoding();
      const ChannelEncoder enc(m.channel, m.lsh);
      const auto ref_h = encode_dataset(ref, enc, m.tolerances);
      const auto owner_h = encode_dataset(owner, enc, m.tolerances);

      for (auto v : cfg.versions) {
        p.version = v;
        std::vector<double> online, offline;
        BenchResult r;
        r.version = v;
        r.dataset_size = n;
        r.repetitions = cfg.repetitions;
        for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
          Sample s = run_once(p, owner_h, ref_h);
          online.push_back(s.online_ms);
          offline.push_back(s.offline_ms);
          r.bytes_sent = s.sent;
          r.bytes_received = s.received;
          r.match_count = s.matches;
        }
        r.online_ms = median(online);
        r.offline_ms = median(offline);
        r.online_min_ms = *std::min_element(online.begin(), online.end());
        r.online_max_ms = *std::max_element(online.begin(), online.end());
        log(LogLevel::Info, "bench " + to_string(v) + " n=" + std::to_string(n) + " online " +
                                std::to_string(r.online_ms) + " ms");
        if (progress) progress(r);
        out.push_back(r);
      }
    }
  } catch (const std::bad_alloc&) {
    fail(ErrorCode::OutOfMemory, "allocation failed; lower the largest --sizes entry");
  }
  return out;
}

void write_bench_table(std::ostream& out, const std::vector<BenchResult>& results) {
  std::vector<std::size_t> sizes;
  std::vector<ProtocolVersion> versions;
  std::map<std::pair<int, std::size_t>, const BenchResult*> cell;
  for (const auto& r : results) {
    if (std::find(sizes.begin(), sizes.end(), r.dataset_size) == sizes.end()) sizes.push_back(r.dataset_size);
    if (std::find(versions.begin(), versions.end(), r.version) == versions.end()) versions.push_back(r.version);
    cell[{static_cast<int>(r.version), r.dataset_size}] = &r;
  }
  std::sort(sizes.begin(), sizes.end());
  std::sort(versions.begin(), versions.end());
  auto section = [&](const std::string& title, auto value) {
    out << title << "\n" << std::left << std::setw(8) << "version";
    for (auto n : sizes) out << std::right << std::setw(14) << ("2^" + std::to_string(std::bit_width(n) - 1));
    out << "\n";
    for (auto v : versions) {
      out << std::left << std::setw(8) << to_string(v);
      for (auto n : sizes) {
        auto it = cell.find({static_cast<int>(v), n});
        std::ostringstream c;
        if (it == cell.end() || !value(*it->second, c)) c << "-";
        out << std::right << std::setw(14) << c.str();
      }
      out << "\n";
    }
    out << "\n";
  };
  out << std::fixed << std::setprecision(1);
  section("online ms (median)", [](const BenchResult& r, std::ostream& o) {
    o << std::fixed << std::setprecision(1) << r.online_ms;
    return true;
  });
  const bool have_v0 = std::find(versions.begin(), versions.end(), ProtocolVersion::V0Public) != versions.end();
  if (have_v0) {
    section("online overhead vs v0 (ms)", [&](const BenchResult& r, std::ostream& o) {
      auto base = cell.find({0, r.dataset_size});
      if (base == cell.end()) return false;
      o << std::showpos << std::fixed << std::setprecision(1) << (r.online_ms - base->second->online_ms)
        << std::noshowpos;
      return true;
    });
  }
  section("online ms (min/max)", [](const BenchResult& r, std::ostream& o) {
    o << std::fixed << std::setprecision(0) << r.online_min_ms << "/" << r.online_max_ms;
    return true;
  });
  section("offline ms (median)", [](const BenchResult& r, std::ostream& o) {
    o << std::fixed << std::setprecision(1) << r.offline_ms;
    return true;
  });
  section("bytes on wire (sent+received)", [](const BenchResult& r, std::ostream& o) {
    o << (r.bytes_sent + r.bytes_received);
    return true;
  });
}

std::string bench_json(const std::vector<BenchResult>& results) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : results) {
    rows.push_back({{"version", to_string(r.version)},
                    {"dataset_size", r.dataset_size},
                    {"online_ms", r.online_ms},
                    {"offline_ms", r.offline_ms},
                    {"online_min_ms", r.online_min_ms},
                    {"online_max_ms", r.online_max_ms},
                    {"bytes_sent", r.bytes_sent},
                    {"bytes_received", r.bytes_received},
                    {"repetitions", r.repetitions},
                    {"match_count", r.match_count}});
  }
  return nlohmann::json{{"results", rows}}.dump(2);
}

}  // namespace gazecheck
