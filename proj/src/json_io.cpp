#include "rmaft/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace rmaft {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

json parse_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // byte is 1-based and points one past the offending character.
    const std::size_t offset = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw JsonParseError("JSON parse error at line " + std::to_string(line) + ", column " + std::to_string(column),
                         line, column);
  }
}

// Reads the keys of one object and complains about anything left over.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ScenarioError(where_ + ": expected an object");
  }

  template <class T>
  bool get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return false;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ScenarioError(where_ + "." + key + ": " + e.what());
    }
    return true;
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void done() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ScenarioError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string, std::less<>> seen_;
};

WorkloadKind workload_from(const std::string& s) {
  if (s == "random_gsync") return WorkloadKind::RandomGsync;
  if (s == "lock_put") return WorkloadKind::LockPut;
  if (s == "kvstore") return WorkloadKind::KvStore;
  if (s == "custom") return WorkloadKind::Custom;
  throw ScenarioError("unknown workload kind '" + s + "'");
}

CheckpointScheme scheme_from(const std::string& s) {
  if (s == "none") return CheckpointScheme::None;
  if (s == "gsync") return CheckpointScheme::Gsync;
  if (s == "locks") return CheckpointScheme::Locks;
  throw ScenarioError("unknown checkpoint scheme '" + s + "'");
}

RecoveryScheme recovery_from(const std::string& s) {
  if (s == "gsync") return RecoveryScheme::Gsync;
  if (s == "locks") return RecoveryScheme::Locks;
  throw ScenarioError("unknown recovery scheme '" + s + "'");
}

std::string_view recovery_name(RecoveryScheme s) { return s == RecoveryScheme::Gsync ? "gsync" : "locks"; }

Op op_from(const json& j, const std::string& where) {
  Fields f(j, where);
  Op op;
  std::string kind;
  if (!f.get("op", kind)) throw ScenarioError(where + ": missing 'op'");
  op.kind = op_kind_from_string(kind);
  f.get("target", op.target);
  f.get("cell", op.cell);
  f.get("local_cell", op.local_cell);
  f.get("value", op.value);
  f.get("compare", op.compare);
  f.get("combine", op.combine);
  f.get("blocking", op.blocking);
  f.get("str", op.str);
  f.done();
  return op;
}

ojson op_to(const Op& op) {
  ojson j;
  j["op"] = std::string(to_string(op.kind));
  j["target"] = op.target;
  j["cell"] = op.cell;
  j["local_cell"] = op.local_cell;
  j["value"] = op.value;
  j["compare"] = op.compare;
  j["combine"] = op.combine;
  j["blocking"] = op.blocking;
  if (op.str != kWholeWindow) j["str"] = op.str;
  return j;
}

void read_workload(const json& j, Scenario& s) {
  Fields f(j, "workload");
  std::string kind;
  if (!f.get("kind", kind)) throw ScenarioError("workload: missing 'kind'");
  s.workload = workload_from(kind);
  switch (s.workload) {
    case WorkloadKind::RandomGsync:
      f.get("rounds", s.gsync.rounds);
      f.get("ops_per_round", s.gsync.ops_per_round);
      f.get("get_fraction", s.gsync.get_fraction);
      f.get("flush_prob", s.gsync.flush_prob);
      f.get("combine_prob", s.gsync.combine_prob);
      f.get("blocking_prob", s.gsync.blocking_prob);
      break;
    case WorkloadKind::LockPut:
      f.get("sessions", s.lock_put.sessions);
      f.get("puts_per_session", s.lock_put.puts_per_session);
      f.get("shared_cells", s.lock_put.shared_cells);
      break;
    case WorkloadKind::KvStore:
      f.get("inserts", s.kvstore.inserts);
      f.get("key_range", s.kvstore.key_range);
      f.get("slots", s.kvstore.slots);
      f.get("waits", s.kvstore.waits);
      break;
    case WorkloadKind::Custom: {
      const json* progs = f.sub("programs");
      if (!progs || !progs->is_array()) throw ScenarioError("workload.programs: expected an array of programs");
      s.programs.clear();
      for (std::size_t p = 0; p < progs->size(); ++p) {
        const auto& prog = (*progs)[p];
        if (!prog.is_array()) throw ScenarioError("workload.programs[" + std::to_string(p) + "]: expected an array");
        auto& out = s.programs.emplace_back();
        for (std::size_t i = 0; i < prog.size(); ++i) {
          out.push_back(op_from(prog[i], "workload.programs[" + std::to_string(p) + "][" + std::to_string(i) + "]"));
        }
      }
      break;
    }
  }
  f.done();
}

void read_protocol(const json& j, ProtocolConfig& pc) {
  Fields f(j, "protocol");
  f.get("groups", pc.groups);
  f.get("taware_level", pc.taware_level);
  f.get("log_budget", pc.log_budget);
  std::string name;
  if (f.get("scheme", name)) pc.scheme = scheme_from(name);
  if (f.get("recovery", name)) pc.recovery = recovery_from(name);
  f.get("mtbf", pc.mtbf);
  f.get("seconds_per_event", pc.seconds_per_event);
  f.get("locks_interval", pc.locks_interval);
  f.get("gsync_adds_hb", pc.gsync_adds_hb);
  f.get("access_deterministic", pc.access_deterministic);
  f.get("gsync_ckpt_barrier", pc.gsync_ckpt_barrier);
  f.get("optimistic_puts", pc.optimistic_puts);
  f.done();
}

}  // namespace

Scenario scenario_from_json(std::string_view text) {
  const json j = parse_text(text);
  Fields f(j, "scenario");
  Scenario s;
  f.get("name", s.name);
  f.get("processes", s.processes);
  f.get("window_cells", s.window_cells);
  f.get("seed", s.seed);
  f.get("max_steps", s.max_steps);
  f.get("random_faults", s.random_faults);
  f.get("random_fault_horizon", s.random_fault_horizon);
  f.get("debug_duplicate_log_entry", s.debug_duplicate_log_entry);
  if (const json* w = f.sub("workload")) read_workload(*w, s);
  if (const json* p = f.sub("protocol")) read_protocol(*p, s.protocol);
  if (const json* faults = f.sub("faults")) {
    if (!faults->is_array()) throw ScenarioError("faults: expected an array");
    for (std::size_t i = 0; i < faults->size(); ++i) {
      Fields ff((*faults)[i], "faults[" + std::to_string(i) + "]");
      FaultSpec spec;
      if (!ff.get("victim", spec.victim)) throw ScenarioError("faults[" + std::to_string(i) + "]: missing 'victim'");
      ff.get("step", spec.step);
      ff.done();
      s.faults.push_back(spec);
    }
  }
  f.done();
  return s;
}

Scenario load_scenario(const std::string& path) { return scenario_from_json(read_file(path)); }

std::string scenario_to_json(const Scenario& s) {
  ojson j;
  j["name"] = s.name;
  j["processes"] = s.processes;
  j["window_cells"] = s.window_cells;
  j["seed"] = s.seed;
  j["max_steps"] = s.max_steps;
  ojson w;
  w["kind"] = std::string(to_string(s.workload));
  switch (s.workload) {
    case WorkloadKind::RandomGsync:
      w["rounds"] = s.gsync.rounds;
      w["ops_per_round"] = s.gsync.ops_per_round;
      w["get_fraction"] = s.gsync.get_fraction;
      w["flush_prob"] = s.gsync.flush_prob;
      w["combine_prob"] = s.gsync.combine_prob;
      w["blocking_prob"] = s.gsync.blocking_prob;
      break;
    case WorkloadKind::LockPut:
      w["sessions"] = s.lock_put.sessions;
      w["puts_per_session"] = s.lock_put.puts_per_session;
      w["shared_cells"] = s.lock_put.shared_cells;
      break;
    case WorkloadKind::KvStore:
      w["inserts"] = s.kvstore.inserts;
      w["key_range"] = s.kvstore.key_range;
      w["slots"] = s.kvstore.slots;
      w["waits"] = s.kvstore.waits;
      break;
    case WorkloadKind::Custom: {
      ojson progs = ojson::array();
      for (const auto& prog : s.programs) {
        ojson ops = ojson::array();
        for (const auto& op : prog) ops.push_back(op_to(op));
        progs.push_back(ops);
      }
      w["programs"] = progs;
      break;
    }
  }
  j["workload"] = w;
  const auto& pc = s.protocol;
  ojson p;
  p["groups"] = pc.groups;
  p["taware_level"] = pc.taware_level;
  p["log_budget"] = pc.log_budget;
  p["scheme"] = std::string(to_string(pc.scheme));
  if (pc.recovery) p["recovery"] = std::string(recovery_name(*pc.recovery));
  p["mtbf"] = pc.mtbf;
  p["seconds_per_event"] = pc.seconds_per_event;
  p["locks_interval"] = pc.locks_interval;
  p["gsync_adds_hb"] = pc.gsync_adds_hb;
  p["access_deterministic"] = pc.access_deterministic;
  p["gsync_ckpt_barrier"] = pc.gsync_ckpt_barrier;
  p["optimistic_puts"] = pc.optimistic_puts;
  j["protocol"] = p;
  ojson faults = ojson::array();
  for (const auto& f : s.faults) faults.push_back({{"victim", f.victim}, {"step", f.step}});
  j["faults"] = faults;
  j["random_faults"] = s.random_faults;
  j["random_fault_horizon"] = s.random_fault_horizon;
  if (s.debug_duplicate_log_entry) j["debug_duplicate_log_entry"] = true;
  return j.dump(2);
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ojson determinant_json(const Determinant& d) {
  ojson j;
  j["id"] = d.id;
  j["type"] = std::string(to_string(d.type));
  j["src"] = d.src.value();
  j["trg"] = d.trg.value();
  j["combine"] = d.combine;
  j["ec"] = d.ec;
  j["gc"] = d.gc;
  j["sc"] = d.sc;
  j["gnc"] = d.gnc;
  return j;
}

ojson action_json(const Action& a) {
  auto j = determinant_json(determinant_of(a));
  j["cell"] = a.data.cell;
  j["value"] = a.data.value;
  j["local_cell"] = a.data.local_cell;
  j["op"] = std::string(to_string(a.data.op));
  if (a.data.op == PutOp::CompareSwap) j["compare"] = a.data.compare;
  j["defined"] = a.data.defined;
  j["blocking"] = a.blocking;
  return j;
}

}  // namespace

std::string report_to_json(const Report& r) {
  ojson j;
  j["digest"] = hex64(r.digest);
  j["fallbacks"] = r.fallbacks;
  j["cf"] = r.cf;
  j["event_count"] = r.event_count;
  j["steps"] = r.steps;
  j["recoveries"] = r.recoveries;
  j["replayed"] = r.replayed;
  j["demand_checkpoints"] = r.demand_checkpoints;
  j["coordinated_checkpoints"] = r.coordinated_checkpoints;
  j["consistency_checks"] = r.consistency_checks;
  j["consistency_violations"] = r.consistency_violations;
  j["lock_safety_violations"] = r.lock_safety_violations;
  j["deadlock"] = r.deadlock;
  j["error"] = r.error;
  ojson recs = ojson::array();
  for (const auto& rec : r.recoveries_log) {
    ojson x;
    x["failed"] = rec.failed.value();
    x["step"] = rec.step;
    x["scheme"] = std::string(recovery_name(rec.scheme));
    x["fallback"] = rec.fallback;
    x["fallback_reason"] = rec.fallback_reason;
    x["fetched"] = rec.fetched;
    x["replayed"] = rec.replay_trace.size();
    x["combining_at_crash"] = rec.combining_at_crash;
    x["exactly_once_error"] = rec.exactly_once_error ? ojson(*rec.exactly_once_error) : ojson(nullptr);
    x["order_error"] = rec.order_error ? ojson(*rec.order_error) : ojson(nullptr);
    x["window_restored"] = rec.window_restored;
    recs.push_back(x);
  }
  j["recoveries_log"] = recs;
  ojson fails = ojson::array();
  for (const auto& f : r.failures()) fails.push_back(f);
  j["failures"] = fails;
  return j.dump(2);
}

FdHierarchy profile_from_json(std::string_view text) {
  const json j = parse_text(text);
  Fields f(j, "profile");
  const json* levels = f.sub("levels");
  if (!levels || !levels->is_array() || levels->empty()) throw ScenarioError("profile.levels: expected a non-empty array");
  f.done();
  std::vector<FdLevel> out;
  for (std::size_t i = 0; i < levels->size(); ++i) {
    const auto where = "profile.levels[" + std::to_string(i) + "]";
    Fields lf((*levels)[i], where);
    FdLevel level;
    if (!lf.get("name", level.name)) throw ScenarioError(where + ": missing 'name'");
    if (!lf.get("count", level.count)) throw ScenarioError(where + ": missing 'count'");
    const json* pdf = lf.sub("pdf");
    if (!pdf) throw ScenarioError(where + ": missing 'pdf'");
    lf.done();
    Fields pf(*pdf, where + ".pdf");
    if (!pf.get("A", level.pdf.a) || !pf.get("lambda", level.pdf.lambda)) {
      throw ScenarioError(where + ".pdf: needs 'A' and 'lambda'");
    }
    pf.done();
    out.push_back(std::move(level));
  }
  try {
    return FdHierarchy(std::move(out));
  } catch (const ArgumentError& e) {
    throw ScenarioError(std::string("profile: ") + e.what());
  }
}

std::string profile_to_json(const FdHierarchy& h) {
  ojson levels = ojson::array();
  for (const auto& l : h.levels()) {
    levels.push_back({{"name", l.name}, {"count", l.count}, {"pdf", {{"A", l.pdf.a}, {"lambda", l.pdf.lambda}}}});
  }
  ojson j;
  j["levels"] = levels;
  return j.dump(2);
}

FdHierarchy load_profile(const std::string& spec) {
  if (spec == "tsubame2") return tsubame2_profile();
  return profile_from_json(read_file(spec));
}

void write_trace_jsonl(std::ostream& out, const OrderGraph& graph) {
  for (const auto& e : graph.events()) {
    ojson j;
    j["index"] = e.index;
    j["process"] = e.process.value();
    if (const auto* a = std::get_if<Action>(&e.body)) {
      j["kind"] = "access";
      j.update(action_json(*a));
    } else if (const auto* s = std::get_if<SyncAction>(&e.body)) {
      j["kind"] = "sync";
      j["type"] = std::string(to_string(s->type));
      j["src"] = s->src.value();
      j["trg"] = s->trg ? ojson(s->trg->value()) : ojson(nullptr);
      j["ec"] = s->ec;
      j["gc"] = s->gc;
      j["sc"] = s->sc;
      j["gnc"] = s->gnc;
      if (s->str) j["str"] = *s->str;
    } else {
      const auto& in = std::get<InternalEvent>(e.body);
      j["kind"] = "internal";
      j["type"] = std::string(to_string(in.kind));
      j["cell"] = in.cell;
      j["value"] = in.value;
      j["ref"] = in.ref;
    }
    out << j.dump() << '\n';
  }
}

void write_logs_jsonl(std::ostream& out, const FtLog& log) {
  const auto n = static_cast<std::uint32_t>(log.processes());
  for (std::uint32_t o = 0; o < n; ++o) {
    const ProcessId owner{o};
    for (std::uint32_t q = 0; q < n; ++q) {
      const ProcessId peer{q};
      for (const auto& a : log.put_log(owner, peer)) {
        ojson j{{"log", "put"}, {"owner", o}, {"peer", q}};
        j.update(action_json(a));
        out << j.dump() << '\n';
      }
      for (const auto& a : log.get_log(owner, peer)) {
        ojson j{{"log", "get"}, {"owner", o}, {"peer", q}};
        j.update(action_json(a));
        out << j.dump() << '\n';
      }
      if (log.n_flag(owner, peer) || log.m_flag(owner, peer) || log.unlogged_flag(owner, peer)) {
        ojson j{{"flags", true},
                {"owner", o},
                {"peer", q},
                {"N", log.n_flag(owner, peer)},
                {"M", log.m_flag(owner, peer)},
                {"U", log.unlogged_flag(owner, peer)}};
        out << j.dump() << '\n';
      }
    }
    for (const auto& d : log.pending_gets(owner)) {
      ojson j{{"log", "pending_get"}, {"owner", o}};
      j.update(determinant_json(d));
      out << j.dump() << '\n';
    }
  }
}

void write_replay_jsonl(std::ostream& out, const std::vector<Determinant>& trace) {
  for (const auto& d : trace) out << determinant_json(d).dump() << '\n';
}

void write_payload(std::ostream& out, std::span<const Word> payload) {
  for (Word w : payload) {
    const auto u = static_cast<std::uint64_t>(w);
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((u >> (8 * b)) & 0xFF);
    out.write(bytes, 8);
  }
}

std::vector<Word> read_payload(std::istream& in) {
  std::vector<Word> out;
  char bytes[8];
  while (in.read(bytes, 8)) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[b])) << (8 * b);
    out.push_back(static_cast<Word>(u));
  }
  if (in.gcount() != 0) throw ArgumentError("payload length is not a multiple of 8 bytes");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rmaft
