#include "freshcl/checkpoint.hpp"
#include "freshcl/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace freshcl {

namespace {

constexpr char kMagic[8] = {'F', 'R', 'E', 'S', 'H', 'C', 'L', '1'};
constexpr std::size_t kSectionNameLen = 16;

class Writer {
public:
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void matrix(const Matrix& m) {
        u64(m.rows());
        u64(m.cols());
        for (std::size_t i = 0; i < m.size(); ++i) f64(m.data()[i]);
    }
    void vec(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void opt_state(const AdamWState& s) {
        u64(s.step);
        matrix(s.first_moment);
        matrix(s.second_moment);
    }
    std::string bytes;
};

class Reader {
public:
    Reader(const std::string& data, std::size_t pos, std::size_t len)
        : data_(data), pos_(pos), end_(pos + len) {}

    std::uint64_t u64() {
        if (pos_ + 8 > end_) throw StateError("checkpoint section truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    Matrix matrix() {
        const std::size_t rows = u64();
        const std::size_t cols = u64();
        Matrix m(rows, cols);
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = f64();
        return m;
    }
    std::vector<double> vec() {
        std::vector<double> v(u64());
        for (double& x : v) x = f64();
        return v;
    }
    AdamWState opt_state() {
        AdamWState s;
        s.step = u64();
        s.first_moment = matrix();
        s.second_moment = matrix();
        return s;
    }
    std::string str(std::size_t n) {
        if (pos_ + n > end_) throw StateError("checkpoint section truncated");
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    const std::string& data_;
    std::size_t pos_;
    std::size_t end_;
};

std::string encode_experts(const ModelState& state) {
    Writer w;
    w.u64(state.experts.size());
    for (const Expert& e : state.experts) {
        w.u64(static_cast<std::uint64_t>(e.id));
        w.u64(e.frozen() ? 1 : 0);
        w.u64(e.usage_count);
        w.matrix(e.projection);
        w.u64(e.frame.dim);
        w.u64(e.frame.num_targets);
        w.matrix(e.frame.targets);
        w.opt_state(e.opt_state);
    }
    return w.bytes;
}

std::string encode_routers(const ModelState& state) {
    Writer w;
    w.u64(state.routers.size());
    for (const auto& [task_id, r] : state.routers) {
        w.u64(static_cast<std::uint64_t>(task_id));
        w.u64(r.frozen ? 1 : 0);
        w.matrix(r.weights);
        w.vec(r.bias);
        w.opt_state(r.opt_weights);
        w.opt_state(r.opt_bias);
    }
    return w.bytes;
}

std::string encode_registry(const ModelState& state) {
    Writer w;
    w.u64(state.class_registry.size());
    for (const auto& [class_id, col] : state.class_registry) {
        w.u64(static_cast<std::uint64_t>(class_id));
        w.u64(static_cast<std::uint64_t>(col));
        w.u64(static_cast<std::uint64_t>(state.class_task.at(class_id)));
    }
    return w.bytes;
}

std::string encode_prototypes(const ModelState& state) {
    Writer w;
    w.u64(state.prototypes.prototypes.size());
    for (const auto& [task_id, proto] : state.prototypes.prototypes) {
        w.u64(static_cast<std::uint64_t>(task_id));
        w.u64(state.prototypes.counts.at(task_id));
        w.vec(proto);
    }
    return w.bytes;
}

} // namespace

std::string encode_checkpoint(const ModelState& state, const std::string& config_echo) {
    const std::pair<std::string, std::string> sections[] = {
        {"experts", encode_experts(state)},
        {"routers", encode_routers(state)},
        {"registry", encode_registry(state)},
        {"prototypes", encode_prototypes(state)},
        {"config", config_echo},
    };

    Writer header;
    header.bytes.append(kMagic, sizeof(kMagic));
    header.u64(std::size(sections));
    std::size_t offset =
        sizeof(kMagic) + 8 + std::size(sections) * (kSectionNameLen + 16);
    for (const auto& [name, payload] : sections) {
        char padded[kSectionNameLen] = {};
        std::memcpy(padded, name.data(), name.size());
        header.bytes.append(padded, kSectionNameLen);
        header.u64(offset);
        header.u64(payload.size());
        offset += payload.size();
    }
    std::string out = std::move(header.bytes);
    for (const auto& [name, payload] : sections) out += payload;
    return out;
}

void save_checkpoint(const ModelState& state, const std::string& config_echo,
                     const std::string& path) {
    const std::string bytes = encode_checkpoint(state, config_echo);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open checkpoint for writing: " + path);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing checkpoint: " + path);
    }
}

Checkpoint decode_checkpoint(const std::string& data) {
    if (data.size() < sizeof(kMagic) + 8 || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
        throw StateError("not a model checkpoint");
    }

    Reader top(data, sizeof(kMagic), data.size() - sizeof(kMagic));
    const std::uint64_t n_sections = top.u64();
    std::map<std::string, std::pair<std::size_t, std::size_t>> table;
    for (std::uint64_t i = 0; i < n_sections; ++i) {
        std::string name = top.str(kSectionNameLen);
        if (const auto nul = name.find('\0'); nul != std::string::npos) name.erase(nul);
        const std::uint64_t off = top.u64();
        const std::uint64_t len = top.u64();
        if (off + len > data.size()) {
            throw StateError("checkpoint section out of bounds: " + name);
        }
        table[name] = {off, len};
    }
    auto section = [&](const std::string& name) {
        const auto it = table.find(name);
        if (it == table.end()) {
            throw StateError("checkpoint missing section: " + name);
        }
        return Reader(data, it->second.first, it->second.second);
    };

    Checkpoint ckpt;
    ModelState& state = ckpt.state;

    Reader er = section("experts");
    const std::uint64_t n_experts = er.u64();
    state.experts.resize(n_experts);
    for (std::uint64_t i = 0; i < n_experts; ++i) {
        Expert& e = state.experts[i];
        e.id = static_cast<int>(er.u64());
        e.status = er.u64() ? ExpertStatus::frozen : ExpertStatus::trainable;
        e.usage_count = er.u64();
        e.projection = er.matrix();
        e.frame.dim = er.u64();
        e.frame.num_targets = er.u64();
        e.frame.targets = er.matrix();
        e.opt_state = er.opt_state();
    }
    state.usage_at_task_start.assign(n_experts, 0);
    for (std::uint64_t i = 0; i < n_experts; ++i) {
        state.usage_at_task_start[i] = state.experts[i].usage_count;
    }

    Reader rr = section("routers");
    const std::uint64_t n_routers = rr.u64();
    for (std::uint64_t i = 0; i < n_routers; ++i) {
        Router r;
        const int task_id = static_cast<int>(rr.u64());
        r.task_id = task_id;
        r.frozen = rr.u64() != 0;
        r.weights = rr.matrix();
        r.bias = rr.vec();
        r.opt_weights = rr.opt_state();
        r.opt_bias = rr.opt_state();
        state.routers.emplace(task_id, std::move(r));
    }
    state.current_task = state.routers.empty() ? -1 : state.routers.rbegin()->first;

    Reader gr = section("registry");
    const std::uint64_t n_classes = gr.u64();
    for (std::uint64_t i = 0; i < n_classes; ++i) {
        const int class_id = static_cast<int>(gr.u64());
        const int col = static_cast<int>(gr.u64());
        const int task_id = static_cast<int>(gr.u64());
        state.class_registry.emplace(class_id, col);
        state.class_task.emplace(class_id, task_id);
        state.task_classes[task_id].push_back(class_id);
    }

    Reader pr = section("prototypes");
    const std::uint64_t n_protos = pr.u64();
    for (std::uint64_t i = 0; i < n_protos; ++i) {
        const int task_id = static_cast<int>(pr.u64());
        const std::uint64_t count = pr.u64();
        state.prototypes.counts[task_id] = count;
        state.prototypes.prototypes[task_id] = pr.vec();
    }

    const auto cfg = table.find("config");
    if (cfg != table.end()) {
        ckpt.config_echo = data.substr(cfg->second.first, cfg->second.second);
    }
    return ckpt;
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingArtifactError("cannot open checkpoint: " + path);
    }
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(data);
}

} // namespace freshcl
