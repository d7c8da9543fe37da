#include "mffssr/data.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mffssr/errors.hpp"

namespace mffssr {

namespace fs = std::filesystem;

Tensor read_png(const fs::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw DataError("read_png: cannot open '" + path.string() + "': " +
                        image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DataError("read_png: decode failed for '" + path.string() + "': " + msg);
    }
    const int h = static_cast<int>(image.height);
    const int w = static_cast<int>(image.width);
    Tensor out(Shape{1, 3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(0, c, y, x) = buffer[(static_cast<size_t>(y) * w + x) * 3 + c] / 255.0;
    return out;
}

void write_png(const fs::path& path, const Tensor& img) {
    const Shape s = img.shape();
    if (s.b != 1 || s.c != 3)
        throw ShapeError("write_png: expected (1, 3, H, W), actual " + s.str());
    std::vector<png_byte> buffer(static_cast<size_t>(s.h) * s.w * 3);
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(img.at(0, c, y, x), 0.0, 1.0);
                buffer[(static_cast<size_t>(y) * s.w + x) * 3 + c] =
                    static_cast<png_byte>(std::lround(v * 255.0));
            }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(s.w);
    image.height = static_cast<png_uint_32>(s.h);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(),
                                 0, nullptr)) {
        throw DataError("write_png: cannot write '" + path.string() + "': " +
                        image.message);
    }
}

DatasetManifest load_manifest(const fs::path& root, const std::string& split,
                              int scale, int patch_h, int patch_w) {
    DatasetManifest m;
    m.root = root;
    m.scale = scale;
    m.patch_h = patch_h;
    m.patch_w = patch_w;
    const fs::path dir = root / split;
    if (!fs::is_directory(dir))
        throw DataError("load_manifest: no such split directory '" + dir.string() + "'");

    const fs::path manifest_file = dir / "manifest.txt";
    if (fs::exists(manifest_file)) {
        std::ifstream in(manifest_file);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            std::string id, lr_l, lr_r;
            std::getline(ls, id, '\t');
            std::getline(ls, lr_l, '\t');
            std::getline(ls, lr_r, '\t');
            SampleRecord rec;
            rec.id = id;
            rec.hr_left = dir / (id + "_L.png");
            rec.hr_right = dir / (id + "_R.png");
            if (!lr_l.empty() && !lr_r.empty()) {
                rec.lr_left = root / lr_l;
                rec.lr_right = root / lr_r;
            }
            m.records.push_back(std::move(rec));
        }
    } else {
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (!name.ends_with("_L.png")) continue;
            SampleRecord rec;
            rec.id = name.substr(0, name.size() - 6);
            rec.hr_left = entry.path();
            rec.hr_right = dir / (rec.id + "_R.png");
            m.records.push_back(std::move(rec));
        }
        std::sort(m.records.begin(), m.records.end(),
                  [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });
    }
    for (const auto& rec : m.records) {
        if (!fs::exists(rec.hr_left) || !fs::exists(rec.hr_right))
            throw DataError("load_manifest: missing view file for id '" + rec.id + "'");
    }
    return m;
}

namespace {

// Keys bicubic kernel, a = -0.5.
double bicubic_kernel(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
    if (x < 2.0) return a * (x * x * x - 5.0 * x * x + 8.0 * x - 4.0);
    return 0.0;
}

struct ResampleTaps {
    std::vector<int> first;           // first source index per output pixel
    std::vector<double> weights;      // taps-per-pixel normalized weights
    int taps = 0;
};

// Antialiased taps for integer downscale by s (kernel stretched by s).
ResampleTaps downsample_taps(int in_size, int s) {
    ResampleTaps t;
    const int out_size = in_size / s;
    t.taps = 4 * s;
    t.first.resize(out_size);
    t.weights.resize(static_cast<size_t>(out_size) * t.taps);
    for (int o = 0; o < out_size; ++o) {
        const double center = (o + 0.5) * s - 0.5;
        const int first = static_cast<int>(std::floor(center)) - 2 * s + 1;
        t.first[o] = first;
        double sum = 0.0;
        for (int k = 0; k < t.taps; ++k) {
            const double x = (center - (first + k)) / s;
            const double wv = bicubic_kernel(x);
            t.weights[static_cast<size_t>(o) * t.taps + k] = wv;
            sum += wv;
        }
        for (int k = 0; k < t.taps; ++k)
            t.weights[static_cast<size_t>(o) * t.taps + k] /= sum;
    }
    return t;
}

}  // namespace

Tensor bicubic_downsample(const Tensor& img, int s) {
    const Shape sh = img.shape();
    if (s < 1 || sh.h % s != 0 || sh.w % s != 0) {
        throw DataError("bicubic_downsample: size " + sh.str() +
                        " not divisible by scale " + std::to_string(s));
    }
    if (s == 1) return img;
    const int oh = sh.h / s, ow = sh.w / s;
    const ResampleTaps th = downsample_taps(sh.h, s);
    const ResampleTaps tw = downsample_taps(sh.w, s);

    // Separable: filter rows into an intermediate, then columns.
    Tensor mid(Shape{sh.b, sh.c, sh.h, ow});
    for (int b = 0; b < sh.b; ++b)
        for (int c = 0; c < sh.c; ++c)
            for (int y = 0; y < sh.h; ++y) {
                const double* src = img.ptr(b, c, y, 0);
                double* dst = mid.ptr(b, c, y, 0);
                for (int x = 0; x < ow; ++x) {
                    const double* wv = &tw.weights[static_cast<size_t>(x) * tw.taps];
                    double acc = 0.0;
                    for (int k = 0; k < tw.taps; ++k) {
                        const int src_x = std::clamp(tw.first[x] + k, 0, sh.w - 1);
                        acc += wv[k] * src[src_x];
                    }
                    dst[x] = acc;
                }
            }
    Tensor out(Shape{sh.b, sh.c, oh, ow});
    for (int b = 0; b < sh.b; ++b)
        for (int c = 0; c < sh.c; ++c)
            for (int y = 0; y < oh; ++y) {
                const double* wv = &th.weights[static_cast<size_t>(y) * th.taps];
                double* dst = out.ptr(b, c, y, 0);
                for (int x = 0; x < ow; ++x) {
                    double acc = 0.0;
                    for (int k = 0; k < th.taps; ++k) {
                        const int src_y = std::clamp(th.first[y] + k, 0, sh.h - 1);
                        acc += wv[k] * mid.at(b, c, src_y, x);
                    }
                    dst[x] = std::clamp(acc, 0.0, 1.0);
                }
            }
    return out;
}

namespace {

Tensor crop(const Tensor& img, int y0, int x0, int h, int w) {
    const Shape s = img.shape();
    Tensor out(Shape{s.b, s.c, h, w});
    for (int b = 0; b < s.b; ++b)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < h; ++y) {
                const double* src = img.ptr(b, c, y0 + y, x0);
                std::copy(src, src + w, out.ptr(b, c, y, 0));
            }
    return out;
}

}  // namespace

LoadedSample load_sample(const SampleRecord& record, int scale) {
    LoadedSample s;
    s.id = record.id;
    Tensor hl = read_png(record.hr_left);
    Tensor hr = read_png(record.hr_right);
    if (!(hl.shape() == hr.shape()))
        throw DataError("load_sample: view dimensions differ for id '" + record.id +
                        "': " + hl.shape().str() + " vs " + hr.shape().str());
    const int ch = (hl.shape().h / scale) * scale;
    const int cw = (hl.shape().w / scale) * scale;
    if (ch < scale || cw < scale)
        throw DataError("load_sample: image too small for scale for id '" + record.id + "'");
    s.hr_left = crop(hl, 0, 0, ch, cw);
    s.hr_right = crop(hr, 0, 0, ch, cw);
    if (record.lr_left && record.lr_right) {
        s.lr_left = read_png(*record.lr_left);
        s.lr_right = read_png(*record.lr_right);
        const Shape want{1, 3, ch / scale, cw / scale};
        if (!(s.lr_left.shape() == want) || !(s.lr_right.shape() == want))
            throw DataError("load_sample: LR size does not match HR/scale for id '" +
                            record.id + "'");
    } else {
        s.lr_left = bicubic_downsample(s.hr_left, scale);
        s.lr_right = bicubic_downsample(s.hr_right, scale);
    }
    return s;
}

TrainTuple sample_patch(const LoadedSample& sample, int scale, int patch_h,
                        int patch_w, Rng& rng) {
    const int lh = sample.lr_left.shape().h;
    const int lw = sample.lr_left.shape().w;
    if (lh < patch_h || lw < patch_w)
        throw DataError("sample_patch: image '" + sample.id + "' smaller than patch");
    const int y0 = static_cast<int>(rng.below(lh - patch_h + 1));
    const int x0 = static_cast<int>(rng.below(lw - patch_w + 1));
    TrainTuple t;
    t.id = sample.id;
    t.lr_left = crop(sample.lr_left, y0, x0, patch_h, patch_w);
    t.lr_right = crop(sample.lr_right, y0, x0, patch_h, patch_w);
    t.hr_left = crop(sample.hr_left, y0 * scale, x0 * scale,
                     patch_h * scale, patch_w * scale);
    t.hr_right = crop(sample.hr_right, y0 * scale, x0 * scale,
                      patch_h * scale, patch_w * scale);
    return t;
}

namespace {

Tensor mirror_w(const Tensor& img) {
    const Shape s = img.shape();
    Tensor out(s);
    for (int b = 0; b < s.b; ++b)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x)
                    out.at(b, c, y, x) = img.at(b, c, y, s.w - 1 - x);
    return out;
}

Tensor mirror_h(const Tensor& img) {
    const Shape s = img.shape();
    Tensor out(s);
    for (int b = 0; b < s.b; ++b)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y) {
                const double* src = img.ptr(b, c, s.h - 1 - y, 0);
                std::copy(src, src + s.w, out.ptr(b, c, y, 0));
            }
    return out;
}

Tensor permute_channels(const Tensor& img, const std::array<int, 3>& perm) {
    const Shape s = img.shape();
    Tensor out(s);
    for (int b = 0; b < s.b; ++b)
        for (int c = 0; c < 3; ++c) {
            const double* src = img.ptr(b, perm[static_cast<size_t>(c)], 0, 0);
            std::copy(src, src + static_cast<std::int64_t>(s.h) * s.w, out.ptr(b, c, 0, 0));
        }
    return out;
}

Tensor rot90_one(const Tensor& img) {
    const Shape s = img.shape();
    Tensor out(Shape{s.b, s.c, s.w, s.h});
    for (int b = 0; b < s.b; ++b)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x)
                    out.at(b, c, x, s.h - 1 - y) = img.at(b, c, y, x);
    return out;
}

}  // namespace

TrainTuple hflip_swap(const TrainTuple& t) {
    // Mirroring flips the disparity sign; swapping the views restores it.
    TrainTuple out;
    out.id = t.id;
    out.lr_left = mirror_w(t.lr_right);
    out.lr_right = mirror_w(t.lr_left);
    out.hr_left = mirror_w(t.hr_right);
    out.hr_right = mirror_w(t.hr_left);
    return out;
}

TrainTuple vflip(const TrainTuple& t) {
    TrainTuple out;
    out.id = t.id;
    out.lr_left = mirror_h(t.lr_left);
    out.lr_right = mirror_h(t.lr_right);
    out.hr_left = mirror_h(t.hr_left);
    out.hr_right = mirror_h(t.hr_right);
    return out;
}

TrainTuple shuffle_channels(const TrainTuple& t, const std::array<int, 3>& perm) {
    TrainTuple out;
    out.id = t.id;
    out.lr_left = permute_channels(t.lr_left, perm);
    out.lr_right = permute_channels(t.lr_right, perm);
    out.hr_left = permute_channels(t.hr_left, perm);
    out.hr_right = permute_channels(t.hr_right, perm);
    return out;
}

TrainTuple rotate90(const TrainTuple& t) {
    TrainTuple out;
    out.id = t.id;
    out.lr_left = rot90_one(t.lr_left);
    out.lr_right = rot90_one(t.lr_right);
    out.hr_left = rot90_one(t.hr_left);
    out.hr_right = rot90_one(t.hr_right);
    return out;
}

TrainTuple augment(const TrainTuple& t, Rng& rng, const AugmentFlags& flags) {
    TrainTuple out = t;
    if (flags.hflip && rng.uniform() < 0.5) out = hflip_swap(out);
    if (flags.vflip && rng.uniform() < 0.5) out = vflip(out);
    if (flags.channel_shuffle) {
        // One permutation of {R, G, B} applied identically to all four images.
        static constexpr std::array<std::array<int, 3>, 6> kPerms{{
            {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
        const auto& perm = kPerms[static_cast<size_t>(rng.below(6))];
        out = shuffle_channels(out, perm);
    }
    if (flags.rot90 && rng.uniform() < 0.5) out = rotate90(out);
    return out;
}

}  // namespace mffssr
