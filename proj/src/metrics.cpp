// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "nacn2n/errors.hpp"

namespace nacn2n {

namespace {

void check_pair(const ImageGrid& x, const ImageGrid& y) {
    if (!x.same_shape(y)) {
        throw ShapeError("metric inputs differ in shape: " + std::to_string(x.height()) + "x" +
                         std::to_string(x.width()) + " vs " + std::to_string(y.height()) + "x" +
                         std::to_string(y.width()));
    }
    if (x.empty()) throw ShapeError("metric inputs are empty");
}

double ssim_formula(double mx, double my, double vx, double vy, double cxy, double c1, double c2,
                    bool literal) {
    const double num = literal ? (2 * mx * my - c1) * (cxy + c2)
                               : (2 * mx * my + c1) * (2 * cxy + c2);
    const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
    return num / den;
}

double ssim_global(const ImageGrid& x, const ImageGrid& y, double c1, double c2, bool literal) {
    const auto a = x.pixels();
    const auto b = y.pixels();
    const double n = static_cast<double>(a.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mx += a[i];
        my += b[i];
    }
    mx /= n;
    my /= n;
    double vx = 0, vy = 0, cxy = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double dx = a[i] - mx;
        const double dy = b[i] - my;
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
    }
    return ssim_formula(mx, my, vx / n, vy / n, cxy / n, c1, c2, literal);
}

double ssim_windowed(const ImageGrid& x, const ImageGrid& y, const SsimOptions& opt, double c1,
                     double c2) {
    const int win = opt.window;
    const int h = x.height();
    const int w = x.width();
    if (h < win || w < win) {
        throw ShapeError("windowed ssim needs images of at least " + std::to_string(win) + "x" +
                         std::to_string(win));
    }
    std::vector<double> g(static_cast<std::size_t>(win) * win);
    double total = 0;
    const int r = win / 2;
    for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
            const double d2 = (i - r) * (i - r) + (j - r) * (j - r);
            g[i * win + j] = std::exp(-d2 / (2 * opt.window_sigma * opt.window_sigma));
            total += g[i * win + j];
        }
    }
    for (auto& v : g) v /= total;
    double acc = 0;
    long count = 0;
    for (int oy = 0; oy + win <= h; ++oy) {
        for (int ox = 0; ox + win <= w; ++ox) {
            double mx = 0, my = 0;
            for (int i = 0; i < win; ++i) {
                for (int j = 0; j < win; ++j) {
                    const double wt = g[i * win + j];
                    mx += wt * x.at(oy + i, ox + j);
                    my += wt * y.at(oy + i, ox + j);
                }
            }
            // centred second pass: constant windows give exactly zero variance
            double vx = 0, vy = 0, cxy = 0;
            for (int i = 0; i < win; ++i) {
                for (int j = 0; j < win; ++j) {
                    const double wt = g[i * win + j];
                    const double a = x.at(oy + i, ox + j) - mx;
                    const double b = y.at(oy + i, ox + j) - my;
                    vx += wt * a * a;
                    vy += wt * b * b;
                    cxy += wt * a * b;
                }
            }
            acc += ssim_formula(mx, my, vx, vy, cxy, c1, c2, opt.printed_form);
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

Aggregate aggregate_rows(const std::vector<MetricRow>& rows) {
    Aggregate a;
    if (rows.empty()) return a;
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        a.psnr_mean += r.psnr;
        a.ssim_mean += r.ssim;
    }
    a.psnr_mean /= n;
    a.ssim_mean /= n;
    for (const auto& r : rows) {
        a.psnr_std += (r.psnr - a.psnr_mean) * (r.psnr - a.psnr_mean);
        a.ssim_std += (r.ssim - a.ssim_mean) * (r.ssim - a.ssim_mean);
    }
    a.psnr_std = std::sqrt(a.psnr_std / n);
    a.ssim_std = std::sqrt(a.ssim_std / n);
    return a;
}

}  // namespace

PsnrResult psnr_detail(const ImageGrid& x, const ImageGrid& y, double max_value) {
    check_pair(x, y);
    if (!(max_value > 0)) throw ConfigError("psnr max_value must be > 0", "metrics.max_value");
    const auto a = x.pixels();
    const auto b = y.pixels();
    double se = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.size());
    if (mse == 0.0) return {kPsnrIdentical, true};
    return {10.0 * std::log10(max_value * max_value / mse), false};
}

double psnr(const ImageGrid& x, const ImageGrid& y, double max_value) {
    return psnr_detail(x, y, max_value).db;
}

SsimMode parse_ssim_mode(const std::string& s) {
    if (s == "global") return SsimMode::global;
    if (s == "windowed") return SsimMode::windowed;
    throw ConfigError("unknown ssim mode '" + s + "'", "metrics.ssim_mode");
}

std::string to_string(SsimMode m) { return m == SsimMode::global ? "global" : "windowed"; }

double ssim(const ImageGrid& x, const ImageGrid& y, const SsimOptions& opt) {
    check_pair(x, y);
    const double c1 = opt.resolved_c1();
    const double c2 = opt.resolved_c2();
    if (!(c1 > 0) || !(c2 > 0)) throw ConfigError("ssim constants must be > 0", "metrics.c1");
    if (opt.mode == SsimMode::global) return ssim_global(x, y, c1, c2, opt.printed_form);
    return ssim_windowed(x, y, opt, c1, c2);
}

double ssim(const ImageGrid& x, const ImageGrid& y, double c1, double c2, SsimMode mode) {
    if (!(c1 > 0)) throw ConfigError("ssim c1 must be > 0", "metrics.c1");
    if (!(c2 > 0)) throw ConfigError("ssim c2 must be > 0", "metrics.c2");
    SsimOptions opt;
    opt.c1 = c1;
    opt.c2 = c2;
    opt.mode = mode;
    return ssim(x, y, opt);
}

MetricReport score(const std::vector<ImageGrid>& outputs, const std::vector<ImageGrid>& refs,
                   const SsimOptions& opt) {
    if (outputs.size() != refs.size()) {
        throw ShapeError("got " + std::to_string(outputs.size()) + " outputs for " +
                         std::to_string(refs.size()) + " references");
    }
    MetricReport rep;
    rep.max_value = opt.max_value;
    rep.c1 = opt.resolved_c1();
    rep.c2 = opt.resolved_c2();
    rep.ssim_mode = opt.mode;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const ImageGrid clipped = clip_for_display(outputs[i]);
        const auto p = psnr_detail(clipped, refs[i], opt.max_value);
        const double s = ssim(clipped, refs[i], opt);
        if (s < 0) ++rep.negative_ssim;
        rep.rows.push_back({refs[i].id(), p.db, s, p.identical});
    }
    rep.aggregate = aggregate_rows(rep.rows);
    return rep;
}

Evaluation evaluate(const ChainModel<float>& chain, const std::vector<ImageGrid>& inputs,
                    const std::vector<ImageGrid>& refs, const SsimOptions& opt) {
    if (inputs.size() != refs.size()) {
        throw Error("evaluate: " + std::to_string(inputs.size()) + " inputs but " +
                    std::to_string(refs.size()) + " references");
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].id() != refs[i].id()) {
            throw Error("evaluate: id mismatch at position " + std::to_string(i) + ": '" +
                        inputs[i].id() + "' vs '" + refs[i].id() + "'");
        }
    }
    Evaluation ev;
    ev.outputs.reserve(inputs.size());
    for (const auto& img : inputs) ev.outputs.push_back(forward(chain, img).final);
    ev.model = score(ev.outputs, refs, opt);
    ev.baseline = score(inputs, refs, opt);
    return ev;
}

std::string MetricReport::to_csv() const {
    std::ostringstream os;
    os << "id,psnr,ssim,identical\n";
    os << std::setprecision(10);
    for (const auto& r : rows) {
        os << r.id << ',' << r.psnr << ',' << r.ssim << ',' << (r.identical ? 1 : 0) << '\n';
    }
    return os.str();
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j;
    j["aggregate"] = {{"psnr_mean", aggregate.psnr_mean},
                      {"psnr_std", aggregate.psnr_std},
                      {"ssim_mean", aggregate.ssim_mean},
                      {"ssim_std", aggregate.ssim_std},
                      {"count", rows.size()},
                      {"negative_ssim", negative_ssim}};
    j["config"] = {{"max_value", max_value},
                   {"c1", c1},
                   {"c2", c2},
                   {"ssim_mode", to_string(ssim_mode)}};
    nlohmann::json per = nlohmann::json::array();
    for (const auto& r : rows) {
        per.push_back({{"id", r.id}, {"psnr", r.psnr}, {"ssim", r.ssim},
                       {"identical", r.identical}});
    }
    j["per_image"] = per;
    if (!metadata.empty()) j["metadata"] = metadata;
    return j;
}

}  // namespace nacn2n
