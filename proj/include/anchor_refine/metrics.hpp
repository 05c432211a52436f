#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "anchor_refine/error.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

/// cell(t, p) counts pixels of true class t predicted as p.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t n = 0) : n_(n), cells_(n * n, 0) {}

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] std::uint64_t cell(std::size_t truth, std::size_t pred) const {
        return cells_.at(truth * n_ + pred);
    }
    void add(std::size_t truth, std::size_t pred, std::uint64_t count = 1) {
        cells_.at(truth * n_ + pred) += count;
    }
    [[nodiscard]] std::uint64_t total() const noexcept {
        std::uint64_t t = 0;
        for (auto c : cells_) t += c;
        return t;
    }

    ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
        if (other.n_ != n_) throw ValidationError("confusion matrices differ in class count");
        for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += other.cells_[i];
        return *this;
    }
    friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) { return a += b; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t n_;
    std::vector<std::uint64_t> cells_;
};

/// Adds one image to a fresh n×n matrix. Pixels whose truth equals
/// `ignore_label` are skipped.
inline ConfusionMatrix accumulate_confusion(const ClassMap& pred, const ClassMap& truth,
                                            std::size_t n,
                                            std::optional<ClassId> ignore_label = std::nullopt) {
    if (pred.height() != truth.height() || pred.width() != truth.width()) {
        throw ValidationError("prediction is " + std::to_string(pred.height()) + "x" +
                              std::to_string(pred.width()) + " but truth is " +
                              std::to_string(truth.height()) + "x" + std::to_string(truth.width()));
    }
    ConfusionMatrix cm(n);
    for (std::size_t px = 0; px < pred.pixel_count(); ++px) {
        const auto t = truth.at(px);
        if (ignore_label && t == *ignore_label) continue;
        const auto p = pred.at(px);
        if (t >= n || p >= n) {
            throw ValidationError("label " + std::to_string(t >= n ? t : p) + " at pixel " +
                                  std::to_string(px) + " is not below class count " +
                                  std::to_string(n));
        }
        cm.add(t, p);
    }
    return cm;
}

/// TP / (TP + FP + FN) per class; nullopt where the denominator is zero.
inline std::vector<std::optional<double>> iou_per_class(const ConfusionMatrix& cm) {
    const auto n = cm.size();
    std::vector<std::optional<double>> iou(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::uint64_t tp = cm.cell(c, c), fp = 0, fn = 0;
        for (std::size_t o = 0; o < n; ++o) {
            if (o == c) continue;
            fp += cm.cell(o, c);
            fn += cm.cell(c, o);
        }
        const auto denom = tp + fp + fn;
        if (denom > 0) iou[c] = static_cast<double>(tp) / static_cast<double>(denom);
    }
    return iou;
}

/// Mean over classes with a defined IoU; nullopt if there are none.
inline std::optional<double> mean_iou(const ConfusionMatrix& cm) {
    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& v : iou_per_class(cm)) {
        if (v) {
            sum += *v;
            ++defined;
        }
    }
    if (defined == 0) return std::nullopt;
    return sum / static_cast<double>(defined);
}

struct EvalReport {
    std::vector<std::optional<double>> per_class_iou;
    std::optional<double> miou;
    std::uint64_t pixel_count = 0;
    nlohmann::json config = nlohmann::json::object();
};

inline EvalReport make_report(const ConfusionMatrix& cm, nlohmann::json config = nlohmann::json::object()) {
    return {iou_per_class(cm), mean_iou(cm), cm.total(), std::move(config)};
}

inline nlohmann::json report_to_json(const EvalReport& report) {
    auto per_class = nlohmann::json::array();
    for (const auto& v : report.per_class_iou) {
        per_class.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    }
    return {{"per_class_iou", std::move(per_class)},
            {"miou", report.miou ? nlohmann::json(*report.miou) : nlohmann::json(nullptr)},
            {"pixel_count", report.pixel_count},
            {"config", report.config}};
}

} // namespace anchor_refine
