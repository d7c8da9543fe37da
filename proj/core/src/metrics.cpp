#include "mffssr/metrics.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "mffssr/errors.hpp"

namespace mffssr {

double psnr(const Tensor& x, const Tensor& y, double peak) {
    check_same_shape(x, y, "psnr");
    if (peak <= 0.0) throw UsageError("psnr: peak must be > 0");
    double mse = 0.0;
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        const double d = x[i] - y[i];
        mse += d * d;
    }
    mse /= static_cast<double>(x.numel());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_window() {
    std::vector<double> w(kWindow);
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - (kWindow - 1) / 2.0;
        w[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += w[static_cast<size_t>(i)];
    }
    for (double& v : w) v /= sum;
    return w;
}

int reflect(int i, int n) {
    // Symmetric padding: ... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// Separable Gaussian filter of one channel plane with reflect padding.
std::vector<double> gauss_filter(const std::vector<double>& src, int h, int w) {
    static const std::vector<double> win = gaussian_window();
    const int r = kWindow / 2;
    std::vector<double> mid(src.size()), out(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k)
                acc += win[static_cast<size_t>(k)] *
                       src[static_cast<size_t>(y) * w + reflect(x + k - r, w)];
            mid[static_cast<size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k)
                acc += win[static_cast<size_t>(k)] *
                       mid[static_cast<size_t>(reflect(y + k - r, h)) * w + x];
            out[static_cast<size_t>(y) * w + x] = acc;
        }
    return out;
}

double ssim_channel(const Tensor& x, const Tensor& y, int b, int c, double peak) {
    const int h = x.shape().h, w = x.shape().w;
    const size_t n = static_cast<size_t>(h) * w;
    std::vector<double> xs(n), ys(n), xx(n), yy(n), xy(n);
    for (size_t i = 0; i < n; ++i) {
        const double xv = x.ptr(b, c, 0, 0)[i];
        const double yv = y.ptr(b, c, 0, 0)[i];
        xs[i] = xv;
        ys[i] = yv;
        xx[i] = xv * xv;
        yy[i] = yv * yv;
        xy[i] = xv * yv;
    }
    const auto mu_x = gauss_filter(xs, h, w);
    const auto mu_y = gauss_filter(ys, h, w);
    const auto m_xx = gauss_filter(xx, h, w);
    const auto m_yy = gauss_filter(yy, h, w);
    const auto m_xy = gauss_filter(xy, h, w);
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double var_x = m_xx[i] - mu_x[i] * mu_x[i];
        const double var_y = m_yy[i] - mu_y[i] * mu_y[i];
        const double cov = m_xy[i] - mu_x[i] * mu_y[i];
        const double num = (2.0 * mu_x[i] * mu_y[i] + c1) * (2.0 * cov + c2);
        const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) *
                           (var_x + var_y + c2);
        acc += num / den;
    }
    return acc / static_cast<double>(n);
}

Tensor crop_border(const Tensor& img, int border) {
    const Shape s = img.shape();
    if (border <= 0) return img;
    if (2 * border >= s.h || 2 * border >= s.w)
        throw UsageError("border_crop leaves an empty image");
    Tensor out(Shape{s.b, s.c, s.h - 2 * border, s.w - 2 * border});
    for (int b = 0; b < s.b; ++b)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < out.shape().h; ++y) {
                const double* src = img.ptr(b, c, y + border, border);
                std::copy(src, src + out.shape().w, out.ptr(b, c, y, 0));
            }
    return out;
}

std::string fmt_metric(double v) {
    if (std::isinf(v)) return "inf";
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

double ssim(const Tensor& x, const Tensor& y, double peak) {
    check_same_shape(x, y, "ssim");
    const Shape s = x.shape();
    double acc = 0.0;
    for (int b = 0; b < s.b; ++b)
        for (int c = 0; c < s.c; ++c) acc += ssim_channel(x, y, b, c, peak);
    return acc / (static_cast<double>(s.b) * s.c);
}

MetricReport evaluate_dataset(const Model& model, const DatasetManifest& dataset,
                              const EvalConfig& cfg) {
    if (dataset.records.empty())
        throw UsageError("evaluate_dataset: dataset is empty");
    MetricReport report;
    for (const auto& rec : dataset.records) {
        const LoadedSample sample = load_sample(rec, model.config().scale);
        const StereoPair sr = model.forward_values(sample.lr_left, sample.lr_right,
                                                   cfg.fused);
        const Tensor sl = crop_border(sr.left, cfg.border_crop);
        const Tensor srr = crop_border(sr.right, cfg.border_crop);
        const Tensor hl = crop_border(sample.hr_left, cfg.border_crop);
        const Tensor hrr = crop_border(sample.hr_right, cfg.border_crop);
        PerImageMetrics m;
        m.id = rec.id;
        m.psnr_l = psnr(sl, hl);
        m.psnr_r = psnr(srr, hrr);
        m.ssim_l = ssim(sl, hl);
        m.ssim_r = ssim(srr, hrr);
        report.per_image.push_back(std::move(m));
    }
    const double n = static_cast<double>(report.per_image.size());
    for (const auto& m : report.per_image) {
        report.psnr_left += m.psnr_l / n;
        report.ssim_left += m.ssim_l / n;
        report.psnr_avg += 0.5 * (m.psnr_l + m.psnr_r) / n;
        report.ssim_avg += 0.5 * (m.ssim_l + m.ssim_r) / n;
    }
    return report;
}

void write_report(std::ostream& os, const MetricReport& report) {
    os << "psnr_left = " << fmt_metric(report.psnr_left) << "\n";
    os << "ssim_left = " << fmt_metric(report.ssim_left) << "\n";
    os << "psnr_avg = " << fmt_metric(report.psnr_avg) << "\n";
    os << "ssim_avg = " << fmt_metric(report.ssim_avg) << "\n";
    os << "images = " << report.per_image.size() << "\n";
    for (size_t i = 0; i < report.per_image.size(); ++i) {
        const auto& m = report.per_image[i];
        os << "image." << i << " = id=" << m.id
           << " psnr_l=" << fmt_metric(m.psnr_l)
           << " psnr_r=" << fmt_metric(m.psnr_r)
           << " ssim_l=" << fmt_metric(m.ssim_l)
           << " ssim_r=" << fmt_metric(m.ssim_r) << "\n";
    }
}

}  // namespace mffssr
