#include "tna/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace tna {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'A', 'C'};

template <class T>
void write_le(std::ostream& out, T v) {
    unsigned char b[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i)
        b[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T read_le(std::istream& in, const std::string& path) {
    unsigned char b[sizeof(T)];
    in.read(reinterpret_cast<char*>(b), sizeof(T));
    if (!in) throw FormatError("truncated checkpoint: " + path);
    std::uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return static_cast<T>(v);
}

void write_string(std::ostream& out, const std::string& s) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), s.size());
}

std::string read_string(std::istream& in, const std::string& path) {
    std::uint32_t n = read_le<std::uint32_t>(in, path);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw FormatError("truncated checkpoint: " + path);
    return s;
}

void write_f32_le(std::ostream& out, const std::vector<float>& v) {
    for (float f : v) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_le<std::uint32_t>(out, bits);
    }
}

std::vector<float> read_f32_le(std::istream& in, size_t n, const std::string& path) {
    std::vector<float> v(n);
    for (size_t i = 0; i < n; ++i) {
        std::uint32_t bits = read_le<std::uint32_t>(in, path);
        std::memcpy(&v[i], &bits, 4);
    }
    return v;
}

} // namespace

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::uint8_t> pack_ternary(const std::vector<float>& values) {
    std::vector<std::uint8_t> packed((values.size() + 3) / 4, 0);
    for (size_t i = 0; i < values.size(); ++i) {
        float v = values[i];
        std::uint8_t code;
        if (v == 0.0f)
            code = 0;
        else if (v == 1.0f)
            code = 1;
        else if (v == -1.0f)
            code = 2;
        else
            throw ContractError("pack_ternary: value " + std::to_string(v) +
                                " is not in {-1,0,+1}");
        packed[i / 4] |= static_cast<std::uint8_t>(code << ((i % 4) * 2));
    }
    return packed;
}

std::vector<float> unpack_ternary(const std::vector<std::uint8_t>& packed,
                                  size_t count) {
    if (packed.size() != (count + 3) / 4)
        throw FormatError("ternary payload length mismatch");
    std::vector<float> values(count);
    for (size_t i = 0; i < count; ++i) {
        std::uint8_t code = (packed[i / 4] >> ((i % 4) * 2)) & 0x3;
        switch (code) {
        case 0: values[i] = 0.0f; break;
        case 1: values[i] = 1.0f; break;
        case 2: values[i] = -1.0f; break;
        default:
            throw FormatError("reserved ternary code in checkpoint payload");
        }
    }
    return values;
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot write checkpoint: " + path);
    f.write(kMagic, 4);
    write_le<std::uint32_t>(f, cp.version);
    write_le<std::uint64_t>(f, cp.config_digest);
    write_le<std::uint32_t>(f, cp.epoch);
    write_string(f, cp.arch);
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(cp.timesteps));
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(cp.in_c));
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(cp.in_h));
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(cp.in_w));
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(cp.classes));
    write_le<std::uint8_t>(f, 0); // no optimizer state stored
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(cp.entries.size()));
    for (const CheckpointEntry& e : cp.entries) {
        write_string(f, e.name);
        write_le<std::uint8_t>(f, e.dtype);
        write_le<std::uint32_t>(f, static_cast<std::uint32_t>(e.shape.size()));
        for (int d : e.shape) write_le<std::uint32_t>(f, static_cast<std::uint32_t>(d));
        if (e.dtype == kDtypeTernary2Bit) {
            std::vector<std::uint8_t> packed = pack_ternary(e.values);
            write_le<std::uint64_t>(f, packed.size());
            f.write(reinterpret_cast<const char*>(packed.data()), packed.size());
        } else {
            write_le<std::uint64_t>(f, e.values.size() * 4);
            write_f32_le(f, e.values);
        }
    }
    if (!f) throw FormatError("write failure on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open checkpoint: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad checkpoint magic in " + path);
    Checkpoint cp;
    cp.version = read_le<std::uint32_t>(f, path);
    if (cp.version != 1)
        throw FormatError("unsupported checkpoint version " +
                          std::to_string(cp.version) + " in " + path);
    cp.config_digest = read_le<std::uint64_t>(f, path);
    cp.epoch = read_le<std::uint32_t>(f, path);
    cp.arch = read_string(f, path);
    cp.timesteps = static_cast<int>(read_le<std::uint32_t>(f, path));
    cp.in_c = static_cast<int>(read_le<std::uint32_t>(f, path));
    cp.in_h = static_cast<int>(read_le<std::uint32_t>(f, path));
    cp.in_w = static_cast<int>(read_le<std::uint32_t>(f, path));
    cp.classes = static_cast<int>(read_le<std::uint32_t>(f, path));
    std::uint8_t has_opt = read_le<std::uint8_t>(f, path);
    if (has_opt != 0)
        throw FormatError("checkpoint optimizer-state payload not supported");
    std::uint32_t n = read_le<std::uint32_t>(f, path);
    for (std::uint32_t i = 0; i < n; ++i) {
        CheckpointEntry e;
        e.name = read_string(f, path);
        e.dtype = read_le<std::uint8_t>(f, path);
        std::uint32_t ndim = read_le<std::uint32_t>(f, path);
        for (std::uint32_t d = 0; d < ndim; ++d)
            e.shape.push_back(static_cast<int>(read_le<std::uint32_t>(f, path)));
        std::uint64_t bytes = read_le<std::uint64_t>(f, path);
        size_t count = static_cast<size_t>(numel(e.shape));
        if (e.dtype == kDtypeTernary2Bit) {
            if (bytes != (count + 3) / 4)
                throw FormatError("ternary payload length mismatch for " + e.name);
            std::vector<std::uint8_t> packed(bytes);
            f.read(reinterpret_cast<char*>(packed.data()), bytes);
            if (!f) throw FormatError("truncated checkpoint: " + path);
            e.values = unpack_ternary(packed, count);
        } else if (e.dtype == kDtypeF32) {
            if (bytes != count * 4)
                throw FormatError("f32 payload length mismatch for " + e.name);
            e.values = read_f32_le(f, count, path);
        } else {
            throw FormatError("unknown dtype tag in checkpoint entry " + e.name);
        }
        cp.entries.push_back(std::move(e));
    }
    return cp;
}

Checkpoint make_checkpoint(const ParamSet<float>& params,
                           const CompressionState<float>& comp,
                           const std::string& arch, int timesteps, int in_c,
                           int in_h, int in_w, int classes,
                           std::uint64_t config_digest, int epoch) {
    Checkpoint cp;
    cp.config_digest = config_digest;
    cp.epoch = static_cast<std::uint32_t>(epoch);
    cp.arch = arch;
    cp.timesteps = timesteps;
    cp.in_c = in_c;
    cp.in_h = in_h;
    cp.in_w = in_w;
    cp.classes = classes;
    for (size_t i = 0; i < params.size(); ++i) {
        CheckpointEntry w;
        w.name = params[i].name + ".weight";
        w.shape = params[i].weight.shape();
        if (comp.active && comp.quantized[i]) {
            w.dtype = kDtypeTernary2Bit;
            w.values = comp.deployed[i];
        } else {
            w.values = params[i].weight.data();
        }
        cp.entries.push_back(std::move(w));
        CheckpointEntry b;
        b.name = params[i].name + ".bias";
        b.shape = params[i].bias.shape();
        b.values = params[i].bias.data();
        cp.entries.push_back(std::move(b));
    }
    return cp;
}

void checkpoint_to_params(const Checkpoint& cp, ParamSet<float>& params,
                          std::vector<char>& quantized) {
    params.clear();
    quantized.clear();
    if (cp.entries.size() % 2 != 0)
        throw FormatError("checkpoint entry count is not weight/bias paired");
    for (size_t i = 0; i < cp.entries.size(); i += 2) {
        const CheckpointEntry& w = cp.entries[i];
        const CheckpointEntry& b = cp.entries[i + 1];
        std::string base = w.name.substr(0, w.name.rfind(".weight"));
        if (b.name != base + ".bias")
            throw FormatError("checkpoint entries out of order at " + w.name);
        LayerParams<float> lp;
        lp.name = base;
        lp.weight = Tensor<float>(w.shape, std::vector<float>(w.values));
        lp.bias = Tensor<float>(b.shape, std::vector<float>(b.values));
        params.push_back(std::move(lp));
        quantized.push_back(w.dtype == kDtypeTernary2Bit ? 1 : 0);
    }
}

} // namespace tna
