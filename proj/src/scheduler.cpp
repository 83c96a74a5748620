#include "compass/scheduler.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <unordered_map>

#include "compass/error.hpp"

namespace compass {

namespace {

constexpr uint64_t kLine = 64;

uint64_t align_up(uint64_t v) { return (v + kLine - 1) / kLine * kLine; }
uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

uint64_t to_cycle(double ns, double clock_ghz) {
    const double c = std::llround(ns * clock_ghz);
    return c < 0 ? 0 : static_cast<uint64_t>(c);
}

uint64_t key(uint32_t uid, uint32_t replica) { return (uint64_t{uid} << 32) | replica; }

// First-fit over the address space above the weight region, 64 B aligned.
class Allocator {
public:
    explicit Allocator(uint64_t base) : base_(base) {}

    uint64_t allocate(uint64_t size) {
        uint64_t at = base_;
        for (const auto& [addr, sz] : live_) {
            if (addr >= at + size) break;
            at = std::max(at, align_up(addr + sz));
        }
        live_.emplace(at, size);
        return at;
    }
    void release(uint64_t addr) { live_.erase(addr); }
    uint64_t top() const { return live_.empty() ? base_ : live_.rbegin()->first + live_.rbegin()->second; }

private:
    uint64_t base_;
    std::map<uint64_t, uint64_t> live_;
};

// Each crossbar's weight slice starts on its own 64 B line.
uint64_t slice_stride(const PartitionUnit& unit) {
    return align_up(ceil_div(unit.weight_bytes, unit.crossbars_needed));
}

GlobalAllocation allocate(const PartitionGroup& group, uint32_t batch) {
    const auto& problem = group.problem();
    const auto& model = problem.model();
    GlobalAllocation a;
    a.capacity = problem.chip().dram.capacity_bytes;
    a.unit_address.resize(model.size());
    for (uint32_t u = 0; u < model.size(); ++u) {
        a.unit_address[u] = a.weight_bytes;
        a.weight_bytes += slice_stride(model.units[u]) * model.units[u].crossbars_needed;
    }

    auto add = [&](const TensorIo& t, uint32_t epoch) {
        TensorAlloc ta;
        ta.node_id = t.node_id;
        ta.producer_partition = t.producer_partition;
        ta.bytes_per_sample = t.bytes_per_sample;
        ta.stride = align_up(t.bytes_per_sample);
        ta.size = ta.stride * batch;
        ta.alloc_epoch = epoch;
        ta.last_use = UINT32_MAX;
        a.tensors.push_back(ta);
    };
    for (uint32_t p = 0; p < group.size(); ++p)
        for (const auto& e : group.partitions[p].entries)
            if (e.node_id == -1 && a.find(-1, -1) < 0) add(e, 0);
    for (uint32_t p = 0; p < group.size(); ++p)
        for (const auto& e : group.partitions[p].exits) add(e, p);
    // Tensors read later die after their last reader; network outputs stay live.
    std::vector<bool> read(a.tensors.size(), false);
    for (uint32_t q = 0; q < group.size(); ++q)
        for (const auto& e : group.partitions[q].entries) {
            const int t = a.find(e.node_id, e.producer_partition);
            if (t < 0) throw ValidationError("entries", "partition " + std::to_string(q) + " reads a tensor nobody stores");
            a.tensors[t].last_use = read[t] ? std::max(a.tensors[t].last_use, q) : q;
            read[t] = true;
        }

    Allocator heap(a.weight_bytes);
    size_t next = 0;
    for (uint32_t p = 0; p < group.size(); ++p) {
        for (size_t t = 0; t < next; ++t)
            if (a.tensors[t].last_use != UINT32_MAX && a.tensors[t].last_use + 1 == p) heap.release(a.tensors[t].address);
        for (; next < a.tensors.size() && a.tensors[next].alloc_epoch == p; ++next) {
            auto& t = a.tensors[next];
            t.address = heap.allocate(t.size);
            if (heap.top() > a.capacity)
                throw GlobalMemoryOverflow(static_cast<int>(p), "partition " + std::to_string(p) + " needs " +
                                                                    std::to_string(heap.top()) +
                                                                    " bytes of global memory but only " +
                                                                    std::to_string(a.capacity) + " exist");
        }
        a.peak_bytes = std::max(a.peak_bytes, heap.top());
    }
    return a;
}

}  // namespace

int GlobalAllocation::find(int node_id, int producer_partition) const {
    for (size_t i = 0; i < tensors.size(); ++i)
        if (tensors[i].node_id == node_id && tensors[i].producer_partition == producer_partition)
            return static_cast<int>(i);
    return -1;
}

std::string_view to_string(Opcode op) {
    switch (op) {
    case Opcode::WriteXbar: return "WRITE_XBAR";
    case Opcode::Load: return "LOAD";
    case Opcode::Store: return "STORE";
    case Opcode::Mvm: return "MVM";
    case Opcode::Vfu: return "VFU";
    case Opcode::Send: return "SEND";
    case Opcode::Recv: return "RECV";
    case Opcode::Barrier: return "BARRIER";
    }
    return "?";
}

Schedule schedule(const PartitionGroup& group, const CostOptions& opts, const ScheduleOptions& sopts) {
    if (opts.batch < 1) throw ValidationError("batch", "must be >= 1");
    if (sopts.mvm_block < 1) throw ValidationError("mvm_block", "must be >= 1");
    const auto& problem = group.problem();
    const auto& chip = problem.chip();
    const auto& model = problem.model();
    const auto& graph = problem.graph();
    const double clk = chip.clock_ghz;
    const double dram_bw = chip.dram.bandwidth_bytes_per_ns;
    const uint32_t act_bits = problem.options().activation_bits;

    Schedule s;
    s.batch = opts.batch;
    s.clock_ghz = clk;
    s.allocation = allocate(group, opts.batch);
    const auto& alloc = s.allocation;

    uint64_t seq = 0;
    auto emit = [&](Instruction in, double begin_ns, double end_ns) {
        in.issue_cycle = to_cycle(begin_ns, clk);
        in.end_cycle = to_cycle(end_ns, clk);
        in.seq = seq++;
        s.instructions.push_back(in);
    };

    double t0 = 0;
    double drain = 0;
    for (uint32_t pi = 0; pi < group.size(); ++pi) {
        const auto& part = group.partitions[pi];
        const auto& plan = *part.plan;
        const auto cost = partition_cost(part, chip, opts, drain);
        drain = cost.drain_ns;
        const size_t first_instr = s.instructions.size();

        std::vector<Placement> placements = part.core_map;
        if (placements.empty()) {
            Partition copy = part;
            map_cores(copy, problem);
            placements = std::move(copy.core_map);
        }
        std::unordered_map<uint64_t, uint32_t> core_of;
        std::vector<uint32_t> cores;
        for (const auto& pl : placements) {
            core_of[key(pl.uid, pl.replica)] = pl.core;
            cores.push_back(pl.core);
        }
        std::sort(cores.begin(), cores.end());
        cores.erase(std::unique(cores.begin(), cores.end()), cores.end());
        const uint32_t io_core = placements.front().core;

        // Weight replacement, spread over the write window by byte share.
        {
            const double win_begin = t0 + cost.write_ns_effective - cost.write_ns;
            const double total = static_cast<double>(plan.weight_bytes_written);
            uint64_t cum = 0;
            for (const auto& pl : placements) {
                const auto& unit = model.units[pl.uid];
                const uint64_t n = unit.crossbars_needed;
                for (uint32_t k = 0; k < n; ++k) {
                    Instruction in;
                    in.core = pl.core;
                    in.op = Opcode::WriteXbar;
                    in.partition = pi;
                    in.bytes = unit.weight_bytes / n + (k < unit.weight_bytes % n ? 1 : 0);
                    in.address = alloc.unit_address[pl.uid] + k * slice_stride(unit);
                    in.layer_id = unit.layer_id;
                    in.uid = pl.uid;
                    in.replica = pl.replica;
                    in.index = k;
                    const double b = win_begin + cost.write_ns * static_cast<double>(cum) / total;
                    cum += in.bytes;
                    emit(in, b, win_begin + cost.write_ns * static_cast<double>(cum) / total);
                }
            }
        }

        std::vector<int> entry_tensor, exit_tensor;
        for (const auto& e : part.entries) entry_tensor.push_back(alloc.find(e.node_id, e.producer_partition));
        for (const auto& e : part.exits) exit_tensor.push_back(alloc.find(e.node_id, e.producer_partition));

        const double tw = t0 + cost.write_ns_effective;
        for (uint32_t smp = 0; smp < opts.batch; ++smp) {
            const double base = tw + smp * cost.steady_ns;

            double t = base;
            for (size_t i = 0; i < part.entries.size(); ++i) {
                const auto& ta = alloc.tensors[entry_tensor[i]];
                Instruction in;
                in.core = io_core;
                in.op = Opcode::Load;
                in.partition = pi;
                in.sample = static_cast<int32_t>(smp);
                in.bytes = ta.bytes_per_sample;
                in.address = ta.address + smp * ta.stride;
                in.tensor = entry_tensor[i];
                const double d = static_cast<double>(in.bytes) / dram_bw + chip.dram.latency_ns;
                emit(in, t, t + d);
                t += d;
            }

            std::vector<std::pair<size_t, double>> stage_end;  // (node index, end time)
            double st = base + cost.io_in_ns;
            for (const auto& lp : plan.layers) {
                const auto& layer = model.layers[lp.layer_index];
                const uint32_t r = lp.replication;
                const double mvm_lat = chip.xbar.mvm_latency_ns;
                for (uint32_t k = 0; k < r; ++k) {
                    const uint64_t inv = lp.invocations / r + (k < lp.invocations % r ? 1 : 0);
                    for (uint32_t u = lp.units.begin; u < lp.units.end; ++u) {
                        for (uint64_t b0 = 0, blk = 0; b0 < inv; b0 += sopts.mvm_block, ++blk) {
                            const uint64_t n = std::min<uint64_t>(sopts.mvm_block, inv - b0);
                            Instruction in;
                            in.core = core_of.at(key(u, k));
                            in.op = Opcode::Mvm;
                            in.partition = pi;
                            in.sample = static_cast<int32_t>(smp);
                            in.layer_id = lp.layer_id;
                            in.uid = u;
                            in.replica = k;
                            in.index = static_cast<uint32_t>(blk);
                            in.invocations = static_cast<uint32_t>(n);
                            emit(in, st + b0 * mvm_lat, st + (b0 + n) * mvm_lat);
                        }
                    }
                }

                double ta = st + lp.stage.mvm_ns;
                for (uint32_t v = lp.units.begin; v < lp.units.end;) {
                    const Range g = model.groups[model.units[v].group_id];
                    if (g.size() > 1) {
                        const uint32_t head = core_of.at(key(g.begin, 0));
                        const uint64_t bytes = problem.tensor_bytes(layer.node_index, model.units[v].out_slice.size());
                        const double d = static_cast<double>(bytes) / chip.bus_bandwidth_bytes_per_ns;
                        for (uint32_t m = g.begin; m < g.end; ++m) {
                            const uint32_t src = core_of.at(key(m, 0));
                            Instruction snd;
                            snd.core = src;
                            snd.op = Opcode::Send;
                            snd.partition = pi;
                            snd.sample = static_cast<int32_t>(smp);
                            snd.bytes = bytes;
                            snd.layer_id = lp.layer_id;
                            snd.uid = m;
                            snd.peer = head;
                            Instruction rcv = snd;
                            rcv.core = head;
                            rcv.op = Opcode::Recv;
                            rcv.peer = src;
                            emit(snd, ta, ta + d);
                            emit(rcv, ta, ta + d);
                            ta += d;
                        }
                    }
                    v = g.end;
                }

                const double tv = st + lp.stage.mvm_ns + lp.stage.acc_ns;
                for (uint32_t k = 0; k < r; ++k) {
                    const uint64_t elems = lp.out_elements / r + (k < lp.out_elements % r ? 1 : 0);
                    Instruction in;
                    in.core = core_of.at(key(lp.units.begin, k));
                    in.op = Opcode::Vfu;
                    in.partition = pi;
                    in.sample = static_cast<int32_t>(smp);
                    in.bytes = ceil_div(elems * act_bits, 8);
                    in.layer_id = lp.layer_id;
                    in.uid = lp.units.begin;
                    in.replica = k;
                    emit(in, tv, st + lp.stage.total());
                }
                st += lp.stage.total();
                stage_end.emplace_back(layer.node_index, st);
            }

            // Aux layers run on the vector unit right after their latest
            // in-partition crossbar predecessor; the cost model folds their
            // time into that stage.
            for (int id : part.attached_aux) {
                const size_t n = graph.index_of(id);
                double at = base + cost.io_in_ns;
                uint32_t core = io_core;
                for (size_t i = stage_end.size(); i-- > 0;) {
                    if (stage_end[i].first < n) {
                        at = stage_end[i].second;
                        core = core_of.at(key(plan.layers[i].units.begin, 0));
                        break;
                    }
                }
                Instruction in;
                in.core = core;
                in.op = Opcode::Vfu;
                in.partition = pi;
                in.sample = static_cast<int32_t>(smp);
                in.bytes = problem.tensor_bytes(n, graph.nodes()[n].out_shape.channels);
                in.layer_id = id;
                emit(in, at, at);
            }

            t = base + cost.io_in_ns + cost.fill_ns;
            for (size_t i = 0; i < part.exits.size(); ++i) {
                const auto& ta = alloc.tensors[exit_tensor[i]];
                uint32_t core = io_core;
                for (const auto& lp : plan.layers)
                    if (lp.layer_id == part.exits[i].node_id) core = core_of.at(key(lp.units.begin, 0));
                Instruction in;
                in.core = core;
                in.op = Opcode::Store;
                in.partition = pi;
                in.sample = static_cast<int32_t>(smp);
                in.bytes = ta.bytes_per_sample;
                in.address = ta.address + smp * ta.stride;
                in.tensor = exit_tensor[i];
                const double d = static_cast<double>(in.bytes) / dram_bw + chip.dram.latency_ns;
                emit(in, t, t + d);
                t += d;
            }
        }

        const double t_end = t0 + cost.latency_ns;
        for (uint32_t c : cores) {
            Instruction in;
            in.core = c;
            in.op = Opcode::Barrier;
            in.partition = pi;
            emit(in, t_end, t_end);
        }

        PartitionWindow w;
        w.start_cycle = to_cycle(t0, clk);
        w.latency_cycles = to_cycle(cost.latency_ns, clk);
        uint64_t last = w.start_cycle;
        for (size_t i = first_instr; i < s.instructions.size(); ++i) last = std::max(last, s.instructions[i].end_cycle);
        w.makespan_cycles = last - w.start_cycle;
        s.windows.push_back(w);
        t0 = t_end;
    }

    std::stable_sort(s.instructions.begin(), s.instructions.end(), [](const Instruction& a, const Instruction& b) {
        if (a.partition != b.partition) return a.partition < b.partition;
        if (a.issue_cycle != b.issue_cycle) return a.issue_cycle < b.issue_cycle;
        if (a.core != b.core) return a.core < b.core;
        return a.seq < b.seq;
    });
    return s;
}

size_t count(const Schedule& s, Opcode op) {
    return static_cast<size_t>(
        std::count_if(s.instructions.begin(), s.instructions.end(), [op](const Instruction& i) { return i.op == op; }));
}

// ---------------------------------------------------------------------------
// Checker

std::vector<std::string> check_schedule(const Schedule& s, const PartitionGroup& group, const CostOptions& opts) {
    std::vector<std::string> v;
    auto fail = [&](std::string msg) { v.push_back(std::move(msg)); };
    const auto& chip = group.problem().chip();
    const auto& alloc = s.allocation;
    const uint64_t B = s.batch;

    uint64_t entries = 0, exits = 0, xbars = 0;
    for (const auto& p : group.partitions) {
        entries += p.entries.size();
        exits += p.exits.size();
        xbars += p.plan->instance_crossbars;
    }
    if (count(s, Opcode::Load) != B * entries) fail("LOAD count is not B x entries");
    if (count(s, Opcode::Store) != B * exits) fail("STORE count is not B x exits");
    if (count(s, Opcode::WriteXbar) != xbars) fail("WRITE_XBAR count is not the mapped crossbar count");

    for (size_t i = 1; i < s.instructions.size(); ++i) {
        const auto& a = s.instructions[i - 1];
        const auto& b = s.instructions[i];
        if (std::tie(a.partition, a.issue_cycle, a.core, a.seq) > std::tie(b.partition, b.issue_cycle, b.core, b.seq)) {
            fail("instructions are not in (partition, cycle, core, seq) order at " + std::to_string(i));
            break;
        }
    }

    // Per-partition weight bytes, write window and makespan.
    double drain = 0;
    std::vector<uint64_t> write_bytes(group.size(), 0), write_end(group.size(), 0);
    std::vector<uint64_t> first_exec(group.size(), UINT64_MAX);
    for (const auto& in : s.instructions) {
        if (in.end_cycle < in.issue_cycle) fail("instruction ends before it issues");
        if (in.op == Opcode::WriteXbar) {
            write_bytes[in.partition] += in.bytes;
            write_end[in.partition] = std::max(write_end[in.partition], in.end_cycle);
        } else if (in.op != Opcode::Barrier) {
            first_exec[in.partition] = std::min(first_exec[in.partition], in.issue_cycle);
        }
    }
    for (uint32_t p = 0; p < group.size(); ++p) {
        const auto c = partition_cost(group.partitions[p], chip, opts, drain);
        drain = c.drain_ns;
        const auto& w = s.windows[p];
        const auto latency = static_cast<int64_t>(std::llround(c.latency_ns * s.clock_ghz));
        if (std::llabs(static_cast<int64_t>(w.makespan_cycles) - latency) > 1)
            fail("partition " + std::to_string(p) + " makespan " + std::to_string(w.makespan_cycles) +
                 " cycles vs cost-model latency " + std::to_string(latency));
        if (write_bytes[p] != c.weight_bytes) fail("partition " + std::to_string(p) + " writes the wrong weight bytes");
        if (first_exec[p] != UINT64_MAX && write_end[p] > first_exec[p])
            fail("partition " + std::to_string(p) + " computes before its weights are written");
    }

    // SEND/RECV pairing.
    using Msg = std::tuple<uint32_t, int32_t, uint32_t, uint32_t, uint64_t, uint64_t, uint64_t>;
    std::vector<Msg> sends, recvs;
    for (const auto& in : s.instructions) {
        if (in.op == Opcode::Send) sends.emplace_back(in.partition, in.sample, in.core, in.peer, in.bytes, in.issue_cycle, in.end_cycle);
        if (in.op == Opcode::Recv) recvs.emplace_back(in.partition, in.sample, in.peer, in.core, in.bytes, in.issue_cycle, in.end_cycle);
    }
    std::sort(sends.begin(), sends.end());
    std::sort(recvs.begin(), recvs.end());
    if (sends != recvs) fail("SEND and RECV instructions do not pair up");

    // Dependence safety and address bounds.
    const size_t nt = alloc.tensors.size();
    std::vector<uint64_t> store_end(nt, 0), first_load(nt, UINT64_MAX);
    std::vector<uint64_t> stores(nt, 0);
    for (const auto& in : s.instructions) {
        if (in.op != Opcode::Load && in.op != Opcode::Store) continue;
        if (in.tensor < 0 || static_cast<size_t>(in.tensor) >= nt) {
            fail(std::string(to_string(in.op)) + " references no tensor");
            continue;
        }
        const auto& t = alloc.tensors[in.tensor];
        if (in.address < t.address || in.address + in.bytes > t.address + t.size)
            fail(std::string(to_string(in.op)) + " outside its tensor's allocation");
        if (in.op == Opcode::Store) {
            if (static_cast<int>(in.partition) != t.producer_partition) fail("STORE outside the producing partition");
            store_end[in.tensor] = std::max(store_end[in.tensor], in.end_cycle);
            ++stores[in.tensor];
        } else {
            if (static_cast<int>(in.partition) <= t.producer_partition) fail("LOAD in or before the producing partition");
            if (in.partition > t.last_use) fail("LOAD after the tensor was freed");
            first_load[in.tensor] = std::min(first_load[in.tensor], in.issue_cycle);
        }
    }
    for (size_t t = 0; t < nt; ++t) {
        const auto& ta = alloc.tensors[t];
        if (ta.node_id == -1) {
            if (stores[t] != 0) fail("the network input is stored");
            continue;
        }
        if (stores[t] != B) fail("tensor " + std::to_string(t) + " is stored " + std::to_string(stores[t]) + " times");
        if (first_load[t] != UINT64_MAX && store_end[t] > first_load[t])
            fail("tensor " + std::to_string(t) + " is loaded before its last store completes");
    }

    // Allocator: no two overlapping address ranges live at the same time.
    for (size_t a = 0; a < nt; ++a) {
        const auto& x = alloc.tensors[a];
        if (x.address < alloc.weight_bytes || x.address + x.size > alloc.capacity || x.address % kLine != 0)
            fail("tensor " + std::to_string(a) + " is misplaced");
        for (size_t b = a + 1; b < nt; ++b) {
            const auto& y = alloc.tensors[b];
            const bool space = x.address < y.address + y.size && y.address < x.address + x.size;
            const bool time = x.alloc_epoch <= y.last_use && y.alloc_epoch <= x.last_use;
            if (space && time) fail("tensors " + std::to_string(a) + " and " + std::to_string(b) + " overlap while live");
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Trace and instruction dump

namespace {

struct Txn {
    uint64_t address;
    uint64_t bytes;
    uint64_t cycle;
    bool write;
};

std::vector<Txn> transactions(const Schedule& s, double ratio) {
    std::vector<Txn> out;
    for (const auto& in : s.instructions) {
        if (in.op != Opcode::WriteXbar && in.op != Opcode::Load && in.op != Opcode::Store) continue;
        if (in.bytes == 0) continue;
        out.push_back({in.address, in.bytes, to_cycle(static_cast<double>(in.issue_cycle), ratio),
                       in.op == Opcode::Store});
    }
    std::stable_sort(out.begin(), out.end(), [](const Txn& a, const Txn& b) { return a.cycle < b.cycle; });
    return out;
}

}  // namespace

TraceSummary trace_summary(const Schedule& s) {
    TraceSummary t;
    for (const auto& in : s.instructions) {
        if (in.op == Opcode::Store) t.write_bytes += in.bytes;
        else if (in.op == Opcode::WriteXbar || in.op == Opcode::Load) t.read_bytes += in.bytes;
        else continue;
        t.lines += ceil_div(in.bytes, kLine);
    }
    return t;
}

TraceSummary write_trace(const Schedule& s, const ChipSpec& chip, std::ostream& out) {
    const auto txns = transactions(s, chip.dram.clock_ghz / chip.clock_ghz);
    TraceSummary t;
    if (txns.empty()) return t;
    out << "# compass-trace v1: addr op cycle (64 B lines, " << chip.dram.clock_ghz << " GHz dram clock)\n";
    char buf[64];
    for (const auto& x : txns) {
        const char* op = x.write ? "WRITE" : "READ";
        for (uint64_t off = 0; off < x.bytes; off += kLine) {
            const int n = std::snprintf(buf, sizeof(buf), "0x%llX %s %llu\n",
                                        static_cast<unsigned long long>(x.address + off), op,
                                        static_cast<unsigned long long>(x.cycle));
            out.write(buf, n);
            ++t.lines;
        }
        (x.write ? t.write_bytes : t.read_bytes) += x.bytes;
    }
    return t;
}

TraceSummary emit_trace(const Schedule& s, const ChipSpec& chip, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    auto t = write_trace(s, chip, f);
    f.flush();
    if (!f) throw IoError("failed writing " + path.string());
    return t;
}

void write_instructions(const Schedule& s, std::ostream& out) {
    out << "# compass-instructions v1: core opcode operand bytes cycle\n";
    char buf[160];
    for (const auto& in : s.instructions) {
        char operand[96];
        switch (in.op) {
        case Opcode::WriteXbar:
            std::snprintf(operand, sizeof(operand), "u%u.r%u.x%u@0x%llX", in.uid, in.replica, in.index,
                          static_cast<unsigned long long>(in.address));
            break;
        case Opcode::Load:
        case Opcode::Store: {
            const auto& t = s.allocation.tensors[in.tensor];
            if (t.node_id < 0)
                std::snprintf(operand, sizeof(operand), "input.s%d@0x%llX", in.sample,
                              static_cast<unsigned long long>(in.address));
            else
                std::snprintf(operand, sizeof(operand), "n%d.p%d.s%d@0x%llX", t.node_id, t.producer_partition,
                              in.sample, static_cast<unsigned long long>(in.address));
            break;
        }
        case Opcode::Mvm:
            std::snprintf(operand, sizeof(operand), "u%u.r%u.b%u.s%d:%u", in.uid, in.replica, in.index, in.sample,
                          in.invocations);
            break;
        case Opcode::Vfu: std::snprintf(operand, sizeof(operand), "n%d.r%u.s%d", in.layer_id, in.replica, in.sample); break;
        case Opcode::Send: std::snprintf(operand, sizeof(operand), "u%u.s%d>c%u", in.uid, in.sample, in.peer); break;
        case Opcode::Recv: std::snprintf(operand, sizeof(operand), "u%u.s%d<c%u", in.uid, in.sample, in.peer); break;
        case Opcode::Barrier: std::snprintf(operand, sizeof(operand), "p%u", in.partition); break;
        }
        const int n = std::snprintf(buf, sizeof(buf), "%u %s %s %llu %llu\n", in.core, to_string(in.op).data(), operand,
                                    static_cast<unsigned long long>(in.bytes),
                                    static_cast<unsigned long long>(in.issue_cycle));
        out.write(buf, n);
    }
}

void emit_instructions(const Schedule& s, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    write_instructions(s, f);
    f.flush();
    if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace compass
