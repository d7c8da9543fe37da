#include "mffssr/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "mffssr/data.hpp"
#include "mffssr/errors.hpp"

namespace mffssr {

void write_loss_curve_svg(const std::filesystem::path& log_file,
                          const std::filesystem::path& out_svg) {
    std::ifstream in(log_file);
    if (!in) throw DataError("cannot open log '" + log_file.string() + "'");
    std::vector<std::pair<double, double>> points;  // (iter, loss)
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        double it = 0.0, loss = 0.0, lr = 0.0;
        if (ls >> it >> loss >> lr && loss > 0.0) points.emplace_back(it, loss);
    }
    if (points.empty()) throw DataError("log '" + log_file.string() + "' has no rows");

    const double w = 720, h = 420, ml = 70, mr = 20, mt = 20, mb = 50;
    double x0 = points.front().first, x1 = points.back().first;
    if (x1 <= x0) x1 = x0 + 1;
    double ymin = 1e300, ymax = -1e300;
    for (auto& [x, y] : points) {
        ymin = std::min(ymin, std::log10(y));
        ymax = std::max(ymax, std::log10(y));
    }
    if (ymax - ymin < 1e-9) ymax = ymin + 1.0;

    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
    auto py = [&](double logy) {
        return h - mb - (logy - ymin) / (ymax - ymin) * (h - mt - mb);
    };

    std::ofstream os(out_svg);
    if (!os) throw DataError("cannot write '" + out_svg.string() + "'");
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='"
       << h << "' viewBox='0 0 " << w << " " << h << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr
       << "' y2='" << h - mb << "' stroke='black'/>\n";
    os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
       << h - mb << "' stroke='black'/>\n";
    for (int k = static_cast<int>(std::ceil(ymin)); k <= static_cast<int>(std::floor(ymax)); ++k) {
        const double y = py(k);
        os << "<line x1='" << ml - 4 << "' y1='" << y << "' x2='" << ml << "' y2='"
           << y << "' stroke='black'/>\n";
        os << "<text x='" << ml - 8 << "' y='" << y + 4
           << "' font-size='12' text-anchor='end'>1e" << k << "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
        const double x = x0 + (x1 - x0) * k / 4.0;
        os << "<text x='" << px(x) << "' y='" << h - mb + 18
           << "' font-size='12' text-anchor='middle'>" << static_cast<long long>(x)
           << "</text>\n";
    }
    os << "<text x='" << (ml + w - mr) / 2 << "' y='" << h - 12
       << "' font-size='13' text-anchor='middle'>iteration</text>\n";
    os << "<polyline fill='none' stroke='#1f77b4' stroke-width='1.5' points='";
    for (auto& [x, y] : points) os << px(x) << "," << py(std::log10(y)) << " ";
    os << "'/>\n</svg>\n";
}

void write_side_by_side_png(const std::filesystem::path& lr_png,
                            const std::filesystem::path& sr_png,
                            const std::filesystem::path& hr_png,
                            const std::filesystem::path& out_png) {
    const Tensor lr = read_png(lr_png);
    const Tensor sr = read_png(sr_png);
    const Tensor hr = read_png(hr_png);
    const int H = sr.shape().h, W = sr.shape().w;
    const int gutter = 2;

    // Nearest-upscale a panel to (H, W).
    auto fit = [&](const Tensor& img) {
        Tensor out(Shape{1, 3, H, W});
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const int sy = std::min(img.shape().h - 1,
                                            y * img.shape().h / H);
                    const int sx = std::min(img.shape().w - 1,
                                            x * img.shape().w / W);
                    out.at(0, c, y, x) = img.at(0, c, sy, sx);
                }
        return out;
    };

    const Tensor panels[3] = {fit(lr), fit(sr), fit(hr)};
    Tensor canvas(Shape{1, 3, H, 3 * W + 2 * gutter}, 1.0);
    for (int p = 0; p < 3; ++p) {
        const int x0 = p * (W + gutter);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < H; ++y) {
                const double* src = panels[p].ptr(0, c, y, 0);
                std::copy(src, src + W, canvas.ptr(0, c, y, x0));
            }
    }
    write_png(out_png, canvas);
}

}  // namespace mffssr
