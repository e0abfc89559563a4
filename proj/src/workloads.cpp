#include "rmaft/workloads.hpp"

#include <random>
#include <string>

#include "rmaft/errors.hpp"

namespace rmaft {

namespace {

std::uint32_t random_peer(std::mt19937_64& rng, std::size_t processes, std::size_t self) {
  std::uniform_int_distribution<std::size_t> pick(0, processes - 2);
  auto q = pick(rng);
  if (q >= self) ++q;
  return static_cast<std::uint32_t>(q);
}

Word random_value(std::mt19937_64& rng) { return std::uniform_int_distribution<Word>(1, 1'000'000)(rng); }

void need_peers(std::size_t processes) {
  if (processes < 2) throw ScenarioError("workloads need at least two processes");
}

}  // namespace

Workload random_gsync_workload(std::size_t processes, std::size_t cells, const RandomGsyncParams& params,
                               std::uint64_t seed) {
  need_peers(processes);
  const std::size_t put_cells = cells / 2;
  if (put_cells < processes || cells - put_cells == 0) {
    throw ScenarioError("window of " + std::to_string(cells) + " cells is too small for " +
                        std::to_string(processes) + " processes (need at least 2N)");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution is_get(params.get_fraction);
  std::bernoulli_distribution do_flush(params.flush_prob);
  std::bernoulli_distribution flush_everyone(0.5);
  std::bernoulli_distribution combine(params.combine_prob);
  std::bernoulli_distribution blocking(params.blocking_prob);

  Workload w;
  w.programs.resize(processes);
  w.uses_gsync = true;

  for (std::size_t round = 0; round < params.rounds; ++round) {
    std::vector<std::vector<bool>> kinds(processes);
    for (auto& k : kinds) {
      for (std::size_t i = 0; i < params.ops_per_round; ++i) k.push_back(is_get(rng));
    }
    // Puts of the whole round first so gets can avoid every written cell.
    std::vector<bool> written(processes * put_cells, false);
    std::vector<std::vector<Op>> accesses(processes);
    for (std::size_t p = 0; p < processes; ++p) {
      for (std::size_t i = 0; i < kinds[p].size(); ++i) {
        if (kinds[p][i]) continue;
        const auto q = random_peer(rng, processes, p);
        std::vector<std::size_t> free;
        for (std::size_t c = p; c < put_cells; c += processes) {
          if (!written[q * put_cells + c]) free.push_back(c);
        }
        if (free.empty()) continue;
        const auto c = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
        written[q * put_cells + c] = true;
        Op op;
        op.kind = OpKind::Put;
        op.target = q;
        op.cell = c;
        op.value = random_value(rng);
        op.combine = combine(rng);
        op.blocking = blocking(rng);
        w.has_combining = w.has_combining || op.combine;
        accesses[p].push_back(op);
      }
    }
    for (std::size_t p = 0; p < processes; ++p) {
      std::size_t landing = put_cells;
      std::vector<Op> merged;
      std::size_t next_put = 0;
      for (std::size_t i = 0; i < kinds[p].size(); ++i) {
        if (!kinds[p][i]) {
          if (next_put < accesses[p].size()) merged.push_back(accesses[p][next_put++]);
          continue;
        }
        if (landing >= cells) continue;
        const auto q = random_peer(rng, processes, p);
        std::vector<std::size_t> unwritten;
        for (std::size_t c = 0; c < put_cells; ++c) {
          if (!written[q * put_cells + c]) unwritten.push_back(c);
        }
        if (unwritten.empty()) continue;
        Op op;
        op.kind = OpKind::Get;
        op.target = q;
        op.cell = unwritten[std::uniform_int_distribution<std::size_t>(0, unwritten.size() - 1)(rng)];
        op.local_cell = landing++;
        op.blocking = blocking(rng);
        merged.push_back(op);
      }
      auto& prog = w.programs[p];
      for (const auto& op : merged) {
        prog.push_back(op);
        if (!op.blocking && do_flush(rng)) {
          Op f;
          if (flush_everyone(rng)) {
            f.kind = OpKind::FlushAll;
          } else {
            f.kind = OpKind::Flush;
            f.target = op.target;
          }
          prog.push_back(f);
        }
      }
      Op g;
      g.kind = OpKind::Gsync;
      prog.push_back(g);
    }
  }
  w.access_deterministic = true;
  return w;
}

Workload lock_put_workload(std::size_t processes, std::size_t cells, const LockPutParams& params,
                           std::uint64_t seed) {
  need_peers(processes);
  if (!params.shared_cells && cells < processes) {
    throw ScenarioError("window needs at least one owned cell per process");
  }
  std::mt19937_64 rng(seed);
  Workload w;
  w.programs.resize(processes);
  w.uses_locks = true;
  w.access_deterministic = !params.shared_cells;
  for (std::size_t p = 0; p < processes; ++p) {
    auto& prog = w.programs[p];
    for (std::size_t s = 0; s < params.sessions; ++s) {
      const auto q = random_peer(rng, processes, p);
      Op lock;
      lock.kind = OpKind::Lock;
      lock.target = q;
      prog.push_back(lock);
      for (std::size_t i = 0; i < params.puts_per_session; ++i) {
        Op put;
        put.kind = OpKind::Put;
        put.target = q;
        if (params.shared_cells) {
          put.cell = std::uniform_int_distribution<std::size_t>(0, cells - 1)(rng);
        } else {
          const std::size_t owned = (cells - p + processes - 1) / processes;
          put.cell = p + processes * std::uniform_int_distribution<std::size_t>(0, owned - 1)(rng);
        }
        put.value = random_value(rng);
        prog.push_back(put);
      }
      Op unlock = lock;
      unlock.kind = OpKind::Unlock;
      prog.push_back(unlock);
    }
  }
  return w;
}

std::size_t kvstore_min_cells(std::size_t processes, const KvStoreParams& params) {
  return 3 * params.slots + 1 + 2 * processes * params.inserts + 4;
}

Workload kvstore_workload(std::size_t processes, std::size_t cells, const KvStoreParams& params,
                          std::uint64_t seed) {
  need_peers(processes);
  if (params.slots == 0) throw ScenarioError("kvstore needs at least one slot");
  if (params.key_range < params.slots) throw ScenarioError("key range must be at least the slot count");
  if (cells < kvstore_min_cells(processes, params)) {
    throw ScenarioError("kvstore needs a window of at least " + std::to_string(kvstore_min_cells(processes, params)) +
                        " cells");
  }
  const std::size_t S = params.slots;
  const std::size_t next_free_cell = 3 * S;
  auto node_key = [&](std::size_t i) { return 3 * S + 1 + 2 * i; };
  auto node_next = [&](std::size_t i) { return 3 * S + 2 + 2 * i; };
  const std::size_t scratch = cells - 4;

  // Table state as the generator expects it if inserts ran in this order.
  std::vector<std::vector<bool>> occupied(processes, std::vector<bool>(S, false));
  std::vector<std::vector<std::size_t>> tail(processes, std::vector<std::size_t>(S, 0));
  std::vector<std::size_t> next_free(processes, 0);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> key_dist(1, params.key_range);
  Workload w;
  w.programs.resize(processes);
  w.has_combining = true;
  w.access_deterministic = false;

  for (std::size_t p = 0; p < processes; ++p) {
    auto& prog = w.programs[p];
    for (std::size_t n = 0; n < params.inserts; ++n) {
      const auto key = key_dist(rng);
      const auto t = static_cast<std::uint32_t>((p + 1 + key % (processes - 1)) % processes);
      const auto s = static_cast<std::size_t>(key % S);
      KvInsert rec{ProcessId{static_cast<std::uint32_t>(p)}, ProcessId{t}, key, occupied[t][s], prog.size(), 0};

      auto emit = [&](OpKind kind, std::size_t cell, Word value, Word compare, std::size_t local) {
        Op op;
        op.kind = kind;
        op.target = t;
        op.cell = cell;
        op.value = value;
        op.compare = compare;
        op.local_cell = local;
        prog.push_back(op);
      };
      auto flush = [&] { emit(OpKind::Flush, 0, 0, 0, 0); };
      const auto k = static_cast<Word>(key);

      emit(OpKind::CompareSwap, s, k, 0, scratch);
      flush();
      if (rec.collision) {
        emit(OpKind::FetchAdd, next_free_cell, 1, 0, scratch + 1);
        flush();
        const auto idx = next_free[t]++;
        const auto ref = static_cast<Word>(idx + 1);
        emit(OpKind::Put, node_key(idx), k, 0, 0);
        emit(OpKind::Put, node_next(idx), 0, 0, 0);
        emit(OpKind::Get, 2 * S + s, 0, 0, scratch + 2);
        flush();
        const auto old_tail = tail[t][s];
        emit(OpKind::CompareSwap, 2 * S + s, ref, static_cast<Word>(old_tail), scratch + 3);
        flush();
        emit(OpKind::Put, old_tail == 0 ? S + s : node_next(old_tail - 1), ref, 0, 0);
        flush();
        tail[t][s] = idx + 1;
      } else {
        occupied[t][s] = true;
      }
      rec.end_op = prog.size();
      w.inserts.push_back(rec);
      for (std::size_t i = 0; i < params.waits; ++i) emit(OpKind::Wait, 0, 0, 0, 0);
    }
  }
  return w;
}

}  // namespace rmaft
