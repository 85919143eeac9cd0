#include "lifb/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include "lifb/io_util.hpp"

namespace lifb {

static constexpr char MAGIC[8] = {'L', 'I', 'F', 'B', 'C', 'K', 'P', '1'};

// ---------- little-endian primitives ----------

static void put_u32(std::string& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(char(uint8_t(v >> (8 * i))));
}

static void put_u64(std::string& b, uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(char(uint8_t(v >> (8 * i))));
}

static void put_f64(std::string& b, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(b, bits);
}

static void put_str(std::string& b, const std::string& s) {
    put_u64(b, s.size());
    b.append(s);
}

struct Reader {
    const std::string& b;
    size_t off = 0;

    void need(size_t n) const {
        if (off + n > b.size()) throw std::runtime_error("checkpoint truncated");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(b[off + size_t(i)])) << (8 * i);
        off += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(b[off + size_t(i)])) << (8 * i);
        off += 8;
        return v;
    }
    double f64() {
        const uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        const uint64_t n = u64();
        need(n);
        std::string s = b.substr(off, n);
        off += n;
        return s;
    }
};

static void put_tensor_block(std::string& b,
                             const std::vector<std::pair<std::string, Tensor>>& block) {
    put_u64(b, block.size());
    for (const auto& [name, t] : block) {
        put_str(b, name);
        put_u64(b, t.ndim());
        for (size_t d = 0; d < t.ndim(); ++d) put_u64(b, t.dim(d));
        for (size_t i = 0; i < t.size(); ++i) put_f64(b, double(t.data()[i]));
    }
}

static std::vector<std::pair<std::string, Tensor>> read_tensor_block(Reader& r) {
    const uint64_t count = r.u64();
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(count);
    for (uint64_t k = 0; k < count; ++k) {
        std::string name = r.str();
        const uint64_t nd = r.u64();
        if (nd == 0 || nd > 8) throw std::runtime_error("checkpoint: bad tensor rank for " + name);
        std::vector<size_t> shape(nd);
        for (auto& d : shape) d = size_t(r.u64());
        Tensor t(shape);
        for (size_t i = 0; i < t.size(); ++i) t.data()[i] = real(r.f64());
        out.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

// ---------- network walks ----------

static std::vector<std::pair<std::string, Tensor*>> param_views(Network& net) {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (auto& l : net.layers) {
        for (GradPair* p : l->params()) out.emplace_back(l->name + "." + p->name, &p->value);
    }
    return out;
}

static std::vector<std::pair<std::string, Tensor*>> stat_views(Network& net) {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (auto& l : net.layers) {
        if (auto* tn = dynamic_cast<TnormLayer*>(l.get())) {
            out.emplace_back(l->name + ".running_mean", &tn->running_mean);
            out.emplace_back(l->name + ".running_var", &tn->running_var);
        }
    }
    return out;
}

// ---------- public API ----------

Checkpoint make_checkpoint(Network& net, const Optimizer* opt, const Rng* rng, uint64_t epoch,
                           uint64_t step, const std::string& metrics_csv) {
    Checkpoint ck;
    ck.spec = net.spec;
    ck.epoch = epoch;
    ck.step = step;
    if (rng) ck.rng_state = rng->save_state();
    for (const auto& [name, t] : param_views(net)) ck.tensors.emplace_back(name, *t);
    if (opt) {
        for (const auto& [name, t] : const_cast<Optimizer*>(opt)->buffers()) {
            ck.momentum.emplace_back(name, *t);
        }
    }
    for (const auto& [name, t] : stat_views(net)) ck.stats.emplace_back(name, *t);
    ck.metrics_csv = metrics_csv;
    return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::string b;
    b.append(MAGIC, sizeof(MAGIC));
    put_u32(b, ck.version);

    put_str(b, ck.spec.arch);
    put_u64(b, ck.spec.input_shape.size());
    for (size_t d : ck.spec.input_shape) put_u64(b, d);
    put_u64(b, ck.spec.classes);
    put_u64(b, ck.spec.hidden);
    put_str(b, neuron_model_to_string(ck.spec.model));
    put_f64(b, ck.spec.params.tau);
    put_f64(b, ck.spec.params.v_th);
    put_f64(b, ck.spec.params.v_h);
    put_f64(b, ck.spec.params.v_rst);
    put_f64(b, ck.spec.params.surrogate_width);
    b.push_back(ck.spec.decoupled ? 1 : 0);
    b.push_back(ck.spec.kappa_frozen ? 1 : 0);
    put_f64(b, ck.spec.kappa_init);

    put_u64(b, ck.epoch);
    put_u64(b, ck.step);
    put_str(b, ck.rng_state);
    put_tensor_block(b, ck.tensors);
    put_tensor_block(b, ck.momentum);
    put_tensor_block(b, ck.stats);
    put_str(b, ck.metrics_csv);

    atomic_write_file(path, b);
}

Checkpoint load_checkpoint(const std::string& path) {
    const std::string b = read_file(path);
    Reader r{b};
    r.need(sizeof(MAGIC));
    if (std::memcmp(b.data(), MAGIC, sizeof(MAGIC)) != 0) {
        throw std::runtime_error(path + ": not a checkpoint (bad magic)");
    }
    r.off = sizeof(MAGIC);

    Checkpoint ck;
    ck.version = r.u32();
    if (ck.version != 1) {
        throw std::runtime_error(path + ": unsupported checkpoint version " +
                                 std::to_string(ck.version));
    }
    ck.spec.arch = r.str();
    const uint64_t nd = r.u64();
    if (nd > 8) throw std::runtime_error(path + ": bad input shape rank");
    ck.spec.input_shape.resize(nd);
    for (auto& d : ck.spec.input_shape) d = size_t(r.u64());
    ck.spec.classes = size_t(r.u64());
    ck.spec.hidden = size_t(r.u64());
    ck.spec.model = neuron_model_from_string(r.str());
    ck.spec.params.tau = r.f64();
    ck.spec.params.v_th = r.f64();
    ck.spec.params.v_h = r.f64();
    ck.spec.params.v_rst = r.f64();
    ck.spec.params.surrogate_width = r.f64();
    r.need(2);
    ck.spec.decoupled = b[r.off++] != 0;
    ck.spec.kappa_frozen = b[r.off++] != 0;
    ck.spec.kappa_init = r.f64();

    ck.epoch = r.u64();
    ck.step = r.u64();
    ck.rng_state = r.str();
    ck.tensors = read_tensor_block(r);
    ck.momentum = read_tensor_block(r);
    ck.stats = read_tensor_block(r);
    ck.metrics_csv = r.str();
    if (r.off != b.size()) throw std::runtime_error(path + ": trailing bytes after checkpoint");
    return ck;
}

template <typename Block>
static void overwrite_by_name(const Block& block,
                              std::vector<std::pair<std::string, Tensor*>> views,
                              const std::string& what) {
    if (block.size() != views.size()) {
        throw std::runtime_error("checkpoint " + what + " block has " +
                                 std::to_string(block.size()) + " records, topology expects " +
                                 std::to_string(views.size()));
    }
    for (const auto& [name, t] : block) {
        Tensor* dst = nullptr;
        for (auto& [vname, vt] : views) {
            if (vname == name) {
                dst = vt;
                break;
            }
        }
        if (!dst) throw std::runtime_error("checkpoint " + what + " record '" + name +
                                           "' does not exist in the rebuilt topology");
        if (dst->shape() != t.shape()) {
            throw std::runtime_error("checkpoint " + what + " record '" + name + "' has shape " +
                                     t.shape_str() + ", topology expects " + dst->shape_str());
        }
        *dst = t;
    }
}

Network restore_network(const Checkpoint& ck) {
    Rng scratch(0); // initialization draws are overwritten below
    Network net = build_network(ck.spec, scratch);
    overwrite_by_name(ck.tensors, param_views(net), "parameter");
    overwrite_by_name(ck.stats, stat_views(net), "running-stat");
    return net;
}

void restore_optimizer(const Checkpoint& ck, Optimizer& opt) {
    overwrite_by_name(ck.momentum, opt.buffers(), "momentum");
}

} // namespace lifb
