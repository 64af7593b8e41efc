#include "holo/foreground.hpp"

#include "holo/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace holo {

namespace {

void require_same_shape(const Frame& a, const Frame& b, const char* what) {
    if (!a.same_shape(b))
        throw DimensionMismatch(std::string(what) + ": frame dimensions differ");
}

}  // namespace

Frame median_background(std::span<const Frame> frames) {
    if (frames.empty())
        throw DimensionMismatch("median_background: no frames");
    for (const Frame& f : frames) require_same_shape(frames[0], f, "median_background");

    const Frame& first = frames[0];
    Frame out(first.width, first.height, first.channels);
    const std::size_t n = frames.size();
    std::vector<float> column(n);
    const std::size_t plane = out.data.size();
    for (std::size_t i = 0; i < plane; ++i) {
        for (std::size_t t = 0; t < n; ++t) column[t] = frames[t].data[i];
        const std::size_t mid = n / 2;
        std::nth_element(column.begin(), column.begin() + mid, column.end());
        if (n % 2 == 1) {
            out.data[i] = column[mid];
        } else {
            const float hi = column[mid];
            const float lo = *std::max_element(column.begin(), column.begin() + mid);
            out.data[i] = 0.5f * (lo + hi);
        }
    }
    return out;
}

SegMask subtract_threshold(const Frame& frame, const Frame& background, double threshold) {
    require_same_shape(frame, background, "subtract_threshold");
    SegMask mask(frame.width, frame.height);
    const std::size_t npix = static_cast<std::size_t>(frame.width) * frame.height;
    for (std::size_t p = 0; p < npix; ++p) {
        double diff = 0.0;
        for (int c = 0; c < frame.channels; ++c) {
            const std::size_t i = p * frame.channels + c;
            diff = std::max(diff, std::abs(double(frame.data[i]) - double(background.data[i])));
        }
        mask.labels[p] = diff > threshold ? 1 : 0;
    }
    return mask;
}

SegMask morph(const SegMask& mask, MorphOp op, int radius) {
    if (radius < 1) throw std::invalid_argument("morph: radius must be >= 1");
    const int w = mask.width, h = mask.height;
    // Square structuring element is separable: run the 1-D min/max filter
    // along rows, then along columns.
    const bool dilate = op == MorphOp::dilate;
    SegMask rows(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t v = dilate ? 0 : 1;
            const int x0 = std::max(0, x - radius);
            const int x1 = std::min(w - 1, x + radius);
            for (int k = x0; k <= x1; ++k) {
                const std::uint8_t s = mask.at(k, y);
                v = dilate ? std::max(v, s) : std::min(v, s);
            }
            rows.at(x, y) = v;
        }
    }
    SegMask out(w, h);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius);
        const int y1 = std::min(h - 1, y + radius);
        for (int x = 0; x < w; ++x) {
            std::uint8_t v = dilate ? 0 : 1;
            for (int k = y0; k <= y1; ++k) {
                const std::uint8_t s = rows.at(x, k);
                v = dilate ? std::max(v, s) : std::min(v, s);
            }
            out.at(x, y) = v;
        }
    }
    return out;
}

SegMask opening(const SegMask& mask, int radius) {
    return morph(morph(mask, MorphOp::erode, radius), MorphOp::dilate, radius);
}

SegMask segment_iterative(const Frame& frame, const Frame& background,
                          const Segmenter& segmenter, int iterations, double threshold) {
    if (iterations < 1)
        throw std::invalid_argument("segment_iterative: iterations must be >= 1");
    SegMask estimate = subtract_threshold(frame, background, threshold);
    for (int k = 0; k < iterations; ++k)
        estimate = segmenter.segment(frame, background, estimate);
    return estimate;
}

ClassWeights class_weights(std::span<const SegMask> masks) {
    if (masks.empty()) throw std::invalid_argument("class_weights: no masks");
    std::uint64_t fg = 0, total = 0;
    for (const SegMask& m : masks) {
        total += m.labels.size();
        for (std::uint8_t v : m.labels) fg += v ? 1 : 0;
    }
    const double f_fg = double(fg) / double(total);
    const double f_bg = 1.0 - f_fg;
    const double median = 0.5 * (f_fg + f_bg);  // two classes: midpoint

    ClassWeights w;
    w.zero_foreground = fg == 0;
    w.zero_background = fg == total;
    w.w_foreground = w.zero_foreground ? 0.0 : median / f_fg;
    w.w_background = w.zero_background ? 0.0 : median / f_bg;
    return w;
}

LossValue balanced_ce_loss(const Vec2& logits, int target_class, const ClassWeights& w) {
    const double weight = target_class == 0 ? w.w_background : w.w_foreground;
    const double m = logits.maxCoeff();
    const double e0 = std::exp(logits(0) - m);
    const double e1 = std::exp(logits(1) - m);
    const double lse = m + std::log(e0 + e1);

    LossValue out;
    out.value = weight * (lse - logits(target_class));
    const double denom = e0 + e1;
    out.grad(0) = weight * (e0 / denom - (target_class == 0 ? 1.0 : 0.0));
    out.grad(1) = weight * (e1 / denom - (target_class == 1 ? 1.0 : 0.0));
    return out;
}

ConfusionCounts confusion(const SegMask& pred, const SegMask& truth, const SegMask* roi) {
    if (pred.width != truth.width || pred.height != truth.height)
        throw DimensionMismatch("confusion: mask dimensions differ");
    if (roi && (roi->width != pred.width || roi->height != pred.height))
        throw DimensionMismatch("confusion: roi dimensions differ");

    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        if (roi && roi->labels[i] == 0) continue;
        const bool p = pred.labels[i] != 0;
        const bool t = truth.labels[i] != 0;
        if (p && t) ++c.tp;
        else if (p && !t) ++c.fp;
        else if (!p && !t) ++c.tn;
        else ++c.fn;
    }
    return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::numeric_limits<double>::quiet_NaN();
    return double(num) / double(den);
}

}  // namespace

Metrics metrics(const ConfusionCounts& c, bool literal_f1) {
    Metrics m;
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.specificity = ratio(c.tn, c.tn + c.fp);
    // Algebraically FP/(FP+TN); phrased off specificity so the two sum to 1
    // exactly in floating point.
    m.fpr = (c.tn + c.fp) == 0 ? std::numeric_limits<double>::quiet_NaN()
                               : 1.0 - m.specificity;
    m.fnr = (c.tp + c.fn) == 0 ? std::numeric_limits<double>::quiet_NaN()
                               : 1.0 - m.recall;
    m.pbc = c.total() == 0 ? std::numeric_limits<double>::quiet_NaN()
                           : 100.0 * double(c.fn + c.fp) / double(c.total());
    m.precision = ratio(c.tp, c.tp + c.fp);
    const double pr = m.precision * m.recall;
    const double sums = m.precision + m.recall;
    if (std::isnan(pr) || sums == 0.0)
        m.f1 = std::numeric_limits<double>::quiet_NaN();
    else
        m.f1 = literal_f1 ? pr / sums : 2.0 * pr / sums;
    return m;
}

SequenceReport evaluate_sequence(const std::filesystem::path& pred_dir,
                                 const std::filesystem::path& truth_dir,
                                 const std::optional<std::filesystem::path>& roi_dir,
                                 bool literal_f1) {
    namespace fs = std::filesystem;
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(pred_dir))
        if (e.is_regular_file()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw MissingFrame("evaluate_sequence: no prediction frames");

    SequenceReport report;
    for (const std::string& name : names) {
        const fs::path truth_path = truth_dir / name;
        if (!fs::exists(truth_path))
            throw MissingFrame("evaluate_sequence: missing ground truth for " + name);
        const SegMask pred = load_mask((pred_dir / name).string());
        const SegMask truth = load_mask(truth_path.string());
        SegMask roi;
        const SegMask* roi_ptr = nullptr;
        if (roi_dir) {
            const fs::path roi_path = *roi_dir / name;
            if (fs::exists(roi_path)) {
                roi = load_mask(roi_path.string());
                roi_ptr = &roi;
            }
        }
        const ConfusionCounts c = confusion(pred, truth, roi_ptr);
        report.frame_names.push_back(name);
        report.per_frame.push_back(c);
        report.aggregate += c;
    }
    report.aggregate_metrics = metrics(report.aggregate, literal_f1);
    return report;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

std::string format_metrics_table(std::span<const CategoryRow> rows) {
    std::ostringstream out;
    out << std::left;
    out.width(28);
    out << "Category";
    for (const char* col : {"Recall", "Specificity", "FPR", "FNR", "PBC", "Precision", "F1"}) {
        out.width(12);
        out << col;
    }
    out << '\n';
    for (const CategoryRow& r : rows) {
        out.width(28);
        out << r.name;
        for (double v : {r.metrics.recall, r.metrics.specificity, r.metrics.fpr,
                         r.metrics.fnr, r.metrics.pbc, r.metrics.precision, r.metrics.f1}) {
            out.width(12);
            out << fmt(v);
        }
        out << '\n';
    }
    return out.str();
}

std::string format_metrics_csv(std::span<const CategoryRow> rows) {
    std::ostringstream out;
    out << "category,recall,specificity,fpr,fnr,pbc,precision,f1\n";
    for (const CategoryRow& r : rows) {
        out << r.name << ',' << fmt(r.metrics.recall) << ',' << fmt(r.metrics.specificity)
            << ',' << fmt(r.metrics.fpr) << ',' << fmt(r.metrics.fnr) << ','
            << fmt(r.metrics.pbc) << ',' << fmt(r.metrics.precision) << ','
            << fmt(r.metrics.f1) << '\n';
    }
    return out.str();
}

}  // namespace holo
