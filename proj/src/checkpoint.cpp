#include "specdiff/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "specdiff/error.hpp"

namespace specdiff {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw CheckpointError("checkpoint: truncated payload");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        return std::bit_cast<double>(v);
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::string out;
    out += "SPDM";
    put_u32(out, ckpt.version);
    put_u32(out, static_cast<std::uint32_t>(ckpt.config_echo.size()));
    out += ckpt.config_echo;
    put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out += name;
        out.push_back(static_cast<char>(t.rank()));
        for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : t.values()) put_f64(out, v);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_checkpoint: cannot open '" + path + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("save_checkpoint: short write to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_checkpoint: cannot open '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{buf};

    if (r.bytes(4) != "SPDM") throw CheckpointError("checkpoint: bad magic bytes");
    Checkpoint ckpt;
    ckpt.version = r.u32();
    if (ckpt.version != kCheckpointVersion)
        throw CheckpointError("checkpoint: unsupported version " + std::to_string(ckpt.version));
    const std::uint32_t echo_len = r.u32();
    ckpt.config_echo = r.bytes(echo_len);
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t name_len = r.u16();
        std::string name = r.bytes(name_len);
        const std::uint8_t ndim = r.u8();
        std::vector<int> shape(ndim);
        std::int64_t n = 1;
        for (auto& d : shape) {
            d = static_cast<int>(r.u32());
            n *= d;
        }
        std::vector<double> values(static_cast<std::size_t>(n));
        for (auto& v : values) v = r.f64();
        ckpt.tensors.emplace_back(std::move(name), Tensor::from(shape, std::move(values)));
    }
    if (r.pos != buf.size())
        throw CheckpointError("checkpoint: file length does not match the declared payload");
    return ckpt;
}

Checkpoint make_checkpoint(const DenoiserNet& net, const std::string& config_echo) {
    Checkpoint ckpt;
    ckpt.config_echo = config_echo;
    for (const auto& [name, t] : net.parameters()) ckpt.tensors.emplace_back(name, t.clone());
    return ckpt;
}

void load_into_net(const Checkpoint& ckpt, DenoiserNet& net) {
    auto& params = net.parameters();
    if (ckpt.tensors.size() != params.size())
        throw CheckpointError("checkpoint: parameter count does not match the network");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& [name, t] = ckpt.tensors[i];
        if (name != params[i].first || t.shape() != params[i].second.shape())
            throw CheckpointError("checkpoint: parameter '" + name +
                                  "' does not match the network layout");
        std::copy(t.values().begin(), t.values().end(), params[i].second.data());
    }
}

}  // namespace specdiff
