// SPDX-License-Identifier: Apache-2.0
//
// PSNR and SSIM against a reference image, plus batch evaluation reports.
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "nacn2n/chain.hpp"
#include "nacn2n/image.hpp"

namespace nacn2n {

inline constexpr double kPsnrIdentical = 100.0;

struct PsnrResult {
    double db = 0.0;
    bool identical = false;
};

/// 10 log10(max^2 / MSE); the 100 dB sentinel when MSE is zero.
PsnrResult psnr_detail(const ImageGrid& x, const ImageGrid& y, double max_value = 1.0);
double psnr(const ImageGrid& x, const ImageGrid& y, double max_value = 1.0);

enum class SsimMode { global, windowed };
SsimMode parse_ssim_mode(const std::string& s);
std::string to_string(SsimMode m);

struct SsimOptions {
    double max_value = 1.0;
    /// Non-positive means the default (0.01 max)^2 / (0.03 max)^2.
    double c1 = 0.0;
    double c2 = 0.0;
    SsimMode mode = SsimMode::global;
    int window = 11;
    double window_sigma = 1.5;
    /// Audit variant with a (2 mu_x mu_y - c1)(sigma_xy + c2) numerator; SSIM(x, x) != 1 under it.
    bool printed_form = false;

    double resolved_c1() const { return c1 > 0 ? c1 : (0.01 * max_value) * (0.01 * max_value); }
    double resolved_c2() const { return c2 > 0 ? c2 : (0.03 * max_value) * (0.03 * max_value); }
};

double ssim(const ImageGrid& x, const ImageGrid& y, const SsimOptions& opt = {});
/// Throws ConfigError when c1 or c2 was given explicitly as a non-positive number.
double ssim(const ImageGrid& x, const ImageGrid& y, double c1, double c2, SsimMode mode);

struct MetricRow {
    std::string id;
    double psnr = 0.0;
    double ssim = 0.0;
    bool identical = false;
};

struct Aggregate {
    double psnr_mean = 0.0;
    double psnr_std = 0.0;
    double ssim_mean = 0.0;
    double ssim_std = 0.0;
};

struct MetricReport {
    std::vector<MetricRow> rows;
    Aggregate aggregate;
    double max_value = 1.0;
    double c1 = 0.0;
    double c2 = 0.0;
    SsimMode ssim_mode = SsimMode::global;
    int negative_ssim = 0;
    nlohmann::json metadata = nlohmann::json::object();

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

/// Scores aligned (output, reference) lists. Outputs are clipped to [0,1] first.
MetricReport score(const std::vector<ImageGrid>& outputs, const std::vector<ImageGrid>& refs,
                   const SsimOptions& opt = {});

struct Evaluation {
    MetricReport model;
    /// Corrupted inputs scored directly against the references.
    MetricReport baseline;
    std::vector<ImageGrid> outputs;
};

/// Runs the chain on every input and scores it; inputs and references must
/// share ids in the same order.
Evaluation evaluate(const ChainModel<float>& chain, const std::vector<ImageGrid>& inputs,
                    const std::vector<ImageGrid>& refs, const SsimOptions& opt = {});

}  // namespace nacn2n
