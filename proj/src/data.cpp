#include "tna/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tna {

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("truncated file: " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::string hex32(std::uint32_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open file: " + path);
    return f;
}

} // namespace

DatasetHandle load_idx(const std::string& images_path,
                       const std::string& labels_path) {
    constexpr std::uint32_t kImageMagic = 0x00000803;
    constexpr std::uint32_t kLabelMagic = 0x00000801;

    std::ifstream imf = open_binary(images_path);
    std::uint32_t magic = read_be32(imf, images_path);
    if (magic != kImageMagic)
        throw FormatError("bad IDX image magic " + hex32(magic) + " in " +
                          images_path);
    std::uint32_t n = read_be32(imf, images_path);
    std::uint32_t h = read_be32(imf, images_path);
    std::uint32_t w = read_be32(imf, images_path);

    std::vector<std::uint8_t> pixels(static_cast<size_t>(n) * h * w);
    imf.read(reinterpret_cast<char*>(pixels.data()), pixels.size());
    if (static_cast<size_t>(imf.gcount()) != pixels.size())
        throw FormatError("truncated IDX image payload in " + images_path);

    std::ifstream lbf = open_binary(labels_path);
    std::uint32_t lmagic = read_be32(lbf, labels_path);
    if (lmagic != kLabelMagic)
        throw FormatError("bad IDX label magic " + hex32(lmagic) + " in " +
                          labels_path);
    std::uint32_t ln = read_be32(lbf, labels_path);
    if (ln != n)
        throw FormatError("IDX image/label count mismatch: " + std::to_string(n) +
                          " vs " + std::to_string(ln));
    std::vector<std::uint8_t> labels(ln);
    lbf.read(reinterpret_cast<char*>(labels.data()), labels.size());
    if (static_cast<size_t>(lbf.gcount()) != labels.size())
        throw FormatError("truncated IDX label payload in " + labels_path);

    DatasetHandle d;
    d.name = "idx";
    d.channels = 1;
    d.height = static_cast<int>(h);
    d.width = static_cast<int>(w);
    d.labels = std::move(labels);
    d.samples.resize(pixels.size());
    for (size_t i = 0; i < pixels.size(); ++i)
        d.samples[i] = static_cast<float>(pixels[i]) / 255.0f;
    int classes = 0;
    for (std::uint8_t l : d.labels) classes = std::max(classes, int(l) + 1);
    d.classes = classes;
    return d;
}

void write_idx_images(const std::string& path,
                      const std::vector<std::uint8_t>& pixels, int n, int h,
                      int w) {
    if (pixels.size() != static_cast<size_t>(n) * h * w)
        throw FormatError("write_idx_images: payload size mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot write file: " + path);
    write_be32(f, 0x00000803);
    write_be32(f, static_cast<std::uint32_t>(n));
    write_be32(f, static_cast<std::uint32_t>(h));
    write_be32(f, static_cast<std::uint32_t>(w));
    f.write(reinterpret_cast<const char*>(pixels.data()), pixels.size());
}

void write_idx_labels(const std::string& path,
                      const std::vector<std::uint8_t>& labels) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot write file: " + path);
    write_be32(f, 0x00000801);
    write_be32(f, static_cast<std::uint32_t>(labels.size()));
    f.write(reinterpret_cast<const char*>(labels.data()), labels.size());
}

namespace {

DatasetHandle load_cifar_records(const std::vector<std::string>& paths,
                                 size_t record_size, size_t label_offset,
                                 int classes, const char* name) {
    DatasetHandle d;
    d.name = name;
    d.classes = classes;
    d.channels = 3;
    d.height = 32;
    d.width = 32;
    constexpr size_t kPixels = 3072;
    for (const std::string& path : paths) {
        std::ifstream f = open_binary(path);
        f.seekg(0, std::ios::end);
        size_t len = static_cast<size_t>(f.tellg());
        f.seekg(0);
        if (len == 0 || len % record_size != 0)
            throw FormatError("file length " + std::to_string(len) +
                              " is not a multiple of record size " +
                              std::to_string(record_size) + ": " + path);
        std::vector<std::uint8_t> rec(record_size);
        size_t n = len / record_size;
        for (size_t i = 0; i < n; ++i) {
            f.read(reinterpret_cast<char*>(rec.data()), record_size);
            if (!f) throw FormatError("truncated record in " + path);
            d.labels.push_back(rec[label_offset]);
            size_t base = d.samples.size();
            d.samples.resize(base + kPixels);
            for (size_t p = 0; p < kPixels; ++p)
                d.samples[base + p] =
                    static_cast<float>(rec[label_offset + 1 + p]) / 255.0f;
        }
    }
    return d;
}

} // namespace

DatasetHandle load_cifar10(const std::vector<std::string>& paths) {
    return load_cifar_records(paths, 3073, 0, 10, "cifar10");
}

DatasetHandle load_cifar100(const std::string& path) {
    // record: coarse label, fine label, 3072 pixels; fine label at offset 1
    return load_cifar_records({path}, 3074, 1, 100, "cifar100");
}

void compute_normalization(const DatasetHandle& data, std::vector<float>& mean,
                           std::vector<float>& stddev) {
    int c = data.channels;
    long per = static_cast<long>(data.height) * data.width;
    std::vector<double> sum(c, 0.0), sq(c, 0.0);
    for (size_t i = 0; i < data.count(); ++i)
        for (int ch = 0; ch < c; ++ch) {
            const float* p = data.samples.data() +
                             (static_cast<long>(i) * c + ch) * per;
            for (long j = 0; j < per; ++j) {
                sum[ch] += p[j];
                sq[ch] += static_cast<double>(p[j]) * p[j];
            }
        }
    mean.resize(c);
    stddev.resize(c);
    double n = static_cast<double>(data.count()) * per;
    for (int ch = 0; ch < c; ++ch) {
        double m = sum[ch] / n;
        mean[ch] = static_cast<float>(m);
        double var = sq[ch] / n - m * m;
        stddev[ch] = static_cast<float>(std::sqrt(std::max(var, 1e-12)));
    }
}

void normalize_sample(const float* src, float* dst, int c, int h, int w,
                      const AugmentConfig& cfg) {
    long per = static_cast<long>(h) * w;
    for (int ch = 0; ch < c; ++ch) {
        float m = cfg.normalize_mean.empty() ? 0.0f : cfg.normalize_mean[ch];
        float s = cfg.normalize_std.empty() ? 1.0f : cfg.normalize_std[ch];
        for (long j = 0; j < per; ++j)
            dst[ch * per + j] = (src[ch * per + j] - m) / s;
    }
}

void augment_sample(const float* src, float* dst, int c, int h, int w,
                    const AugmentConfig& cfg, std::mt19937_64& rng) {
    if (!cfg.enabled) {
        normalize_sample(src, dst, c, h, w, cfg);
        return;
    }
    int pad = cfg.pad;
    std::uniform_int_distribution<int> off(0, 2 * pad);
    int oy = off(rng), ox = off(rng);
    std::bernoulli_distribution flip_dist(cfg.hflip_prob);
    bool flip = flip_dist(rng);

    long per = static_cast<long>(h) * w;
    std::vector<float> cropped(static_cast<size_t>(c) * per, 0.0f);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y) {
            int sy = y + oy - pad;
            if (sy < 0 || sy >= h) continue;
            for (int x = 0; x < w; ++x) {
                int sx = x + ox - pad;
                if (sx < 0 || sx >= w) continue;
                int tx = flip ? w - 1 - x : x;
                cropped[ch * per + static_cast<long>(y) * w + tx] =
                    src[ch * per + static_cast<long>(sy) * w + sx];
            }
        }
    normalize_sample(cropped.data(), dst, c, h, w, cfg);
}

namespace {

// Smooth per-class pattern: mixture of a few seeded gaussian bumps.
std::vector<float> class_template(int h, int w, std::mt19937_64& rng,
                                  float lo, float hi) {
    std::uniform_real_distribution<double> pos_y(0.0, h - 1.0);
    std::uniform_real_distribution<double> pos_x(0.0, w - 1.0);
    std::uniform_real_distribution<double> sigma(h / 10.0, h / 4.0);
    std::vector<float> tpl(static_cast<size_t>(h) * w, 0.0f);
    for (int b = 0; b < 4; ++b) {
        double cy = pos_y(rng), cx = pos_x(rng), s = sigma(rng);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                tpl[static_cast<long>(y) * w + x] +=
                    static_cast<float>(std::exp(-d2 / (2 * s * s)));
            }
    }
    float mx = 0;
    for (float v : tpl) mx = std::max(mx, v);
    for (float& v : tpl) v = lo + (hi - lo) * (mx > 0 ? v / mx : 0.0f);
    return tpl;
}

} // namespace

DatasetHandle synthetic_spikes(int classes, int timesteps, int channels,
                               int height, int width, int n,
                               std::uint64_t seed) {
    if (classes < 2) throw ConfigError("synthetic_spikes needs >= 2 classes");
    std::mt19937_64 rng(seed);
    long per = static_cast<long>(channels) * height * width;
    std::vector<std::vector<float>> rates(classes);
    for (int cls = 0; cls < classes; ++cls) {
        rates[cls].reserve(per);
        for (int ch = 0; ch < channels; ++ch) {
            std::vector<float> tpl = class_template(height, width, rng, 0.02f, 0.5f);
            rates[cls].insert(rates[cls].end(), tpl.begin(), tpl.end());
        }
    }
    DatasetHandle d;
    d.name = "synthetic_spikes";
    d.classes = classes;
    d.channels = channels;
    d.height = height;
    d.width = width;
    d.timesteps = timesteps;
    d.samples.resize(static_cast<size_t>(n) * timesteps * per);
    d.labels.resize(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        int cls = i % classes;
        d.labels[i] = static_cast<std::uint8_t>(cls);
        float* s = d.samples.data() + static_cast<long>(i) * timesteps * per;
        for (int t = 0; t < timesteps; ++t)
            for (long p = 0; p < per; ++p)
                s[static_cast<long>(t) * per + p] =
                    u(rng) < rates[cls][p] ? 1.0f : 0.0f;
    }
    return d;
}

DatasetHandle synthetic_images(int classes, int height, int width, int n,
                               std::uint64_t seed) {
    if (classes < 2) throw ConfigError("synthetic_images needs >= 2 classes");
    std::mt19937_64 rng(seed);
    std::vector<std::vector<float>> templates(classes);
    for (int cls = 0; cls < classes; ++cls)
        templates[cls] = class_template(height, width, rng, 0.0f, 1.0f);

    DatasetHandle d;
    d.name = "synthetic_images";
    d.classes = classes;
    d.channels = 1;
    d.height = height;
    d.width = width;
    long per = static_cast<long>(height) * width;
    d.samples.resize(static_cast<size_t>(n) * per);
    d.labels.resize(n);
    std::normal_distribution<double> noise(0.0, 0.25);
    std::uniform_int_distribution<int> shift(-2, 2);
    for (int i = 0; i < n; ++i) {
        int cls = i % classes;
        d.labels[i] = static_cast<std::uint8_t>(cls);
        int dy = shift(rng), dx = shift(rng);
        float* s = d.samples.data() + static_cast<long>(i) * per;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                int sy = y + dy, sx = x + dx;
                float base = (sy >= 0 && sy < height && sx >= 0 && sx < width)
                                 ? templates[cls][static_cast<long>(sy) * width + sx]
                                 : 0.0f;
                float v = base + static_cast<float>(noise(rng));
                s[static_cast<long>(y) * width + x] =
                    std::min(1.0f, std::max(0.0f, v));
            }
    }
    return d;
}

namespace {

DatasetHandle take(const DatasetHandle& data, const std::vector<size_t>& idx) {
    DatasetHandle out;
    out.name = data.name;
    out.classes = data.classes;
    out.channels = data.channels;
    out.height = data.height;
    out.width = data.width;
    out.timesteps = data.timesteps;
    long per = data.sample_size();
    out.samples.resize(idx.size() * per);
    out.labels.resize(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        std::memcpy(out.samples.data() + static_cast<long>(i) * per,
                    data.samples.data() + static_cast<long>(idx[i]) * per,
                    per * sizeof(float));
        out.labels[i] = data.labels[idx[i]];
    }
    return out;
}

} // namespace

void split_dataset(const DatasetHandle& data, double fraction,
                   std::uint64_t seed, DatasetHandle& main_part,
                   DatasetHandle& carved_part) {
    if (fraction < 0.0 || fraction >= 1.0)
        throw ConfigError("split fraction must be in [0,1)");
    std::vector<size_t> idx(data.count());
    std::iota(idx.begin(), idx.end(), size_t(0));
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    size_t carved = static_cast<size_t>(fraction * data.count());
    std::vector<size_t> carved_idx(idx.begin(), idx.begin() + carved);
    std::vector<size_t> main_idx(idx.begin() + carved, idx.end());
    carved_part = take(data, carved_idx);
    main_part = take(data, main_idx);
}

DatasetHandle subset(const DatasetHandle& data, size_t n, std::uint64_t seed) {
    std::vector<size_t> idx(data.count());
    std::iota(idx.begin(), idx.end(), size_t(0));
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(n, data.count()));
    return take(data, idx);
}

std::vector<size_t> epoch_order(size_t count, std::uint64_t seed) {
    std::vector<size_t> idx(count);
    std::iota(idx.begin(), idx.end(), size_t(0));
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

} // namespace tna
