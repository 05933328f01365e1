#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <fmt/format.h>

#include "uab/error.hpp"
#include "uab/evalmetrics.hpp"

namespace uab {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw LengthMismatch(fmt::format("correlation inputs differ in length ({} vs {})", x.size(), y.size()));
    }
    if (x.size() < 2) {
        throw InsufficientData("correlation needs at least two samples");
    }
}

std::int64_t pairs(std::int64_t t) { return t * (t - 1) / 2; }

// Sum of t(t-1)/2 over runs of equal values in an already sorted range.
template <typename It, typename Eq>
std::int64_t tied_pairs(It first, It last, Eq eq) {
    std::int64_t total = 0;
    while (first != last) {
        It run = first;
        std::int64_t len = 0;
        while (run != last && eq(*run, *first)) {
            ++run;
            ++len;
        }
        total += pairs(len);
        first = run;
    }
    return total;
}

// Stable merge sort of v counting the number of inversions removed.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) {
        return 0;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = merge_count(v, scratch, lo, mid) + merge_count(v, scratch, mid, hi);
    std::size_t i = lo;
    std::size_t j = mid;
    std::size_t k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += static_cast<std::int64_t>(mid - i);
            scratch[k++] = v[j++];
        } else {
            scratch[k++] = v[i++];
        }
    }
    while (i < mid) {
        scratch[k++] = v[i++];
    }
    while (j < hi) {
        scratch[k++] = v[j++];
    }
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw ZeroVariance("correlation undefined for a constant input");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

double kendall(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
    });

    const std::int64_t total = pairs(static_cast<std::int64_t>(n));
    const std::int64_t x_ties =
        tied_pairs(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] == x[b]; });
    const std::int64_t joint_ties = tied_pairs(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a] == x[b] && y[a] == y[b];
    });

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        ys[i] = y[order[i]];
    }
    std::vector<double> scratch(n);
    const std::int64_t swaps = merge_count(ys, scratch, 0, n);
    const std::int64_t y_ties = tied_pairs(ys.begin(), ys.end(), std::equal_to<>{});

    if (x_ties == total || y_ties == total) {
        throw ZeroVariance("kendall tau undefined for a constant input");
    }
    const std::int64_t concordant_minus_discordant = total - x_ties - y_ties + joint_ties - 2 * swaps;
    const double denom = std::sqrt(static_cast<double>(total - x_ties)) * std::sqrt(static_cast<double>(total - y_ties));
    return std::clamp(static_cast<double>(concordant_minus_discordant) / denom, -1.0, 1.0);
}

CorrelationTriple correlate(std::span<const double> x, std::span<const double> y) {
    CorrelationTriple t;
    t.n = x.size();
    auto guarded = [&](auto fn) -> std::optional<double> {
        try {
            return fn(x, y);
        } catch (const ZeroVariance&) {
            return std::nullopt;
        } catch (const InsufficientData&) {
            return std::nullopt;
        }
    };
    if (x.size() != y.size()) {
        throw LengthMismatch(fmt::format("correlation inputs differ in length ({} vs {})", x.size(), y.size()));
    }
    t.pearson = guarded([](auto a, auto b) { return pearson(a, b); });
    t.kendall = guarded([](auto a, auto b) { return kendall(a, b); });
    t.spearman = guarded([](auto a, auto b) { return spearman(a, b); });
    return t;
}

void sort_by_pearson(std::vector<NamedCorrelation>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const NamedCorrelation& a, const NamedCorrelation& b) {
        const auto& pa = a.triple.pearson;
        const auto& pb = b.triple.pearson;
        if (pa.has_value() != pb.has_value()) {
            return pa.has_value();
        }
        if (pa && *pa != *pb) {
            return *pa > *pb;
        }
        return a.name < b.name;
    });
}

}  // namespace uab
