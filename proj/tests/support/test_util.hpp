#pragma once

// Shared helpers and independent oracles for the test suites. Everything in
// here must stay independent of the implementation paths it checks.

#include "climreg/calendar.hpp"
#include "climreg/grid_data.hpp"
#include "climreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace testutil {

/// Unique scratch directory under the current working directory, removed on
/// destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::current_path() /
                ("tmp_" + tag + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Small random daily series for view/encoder tests.
inline climreg::DailyFieldSeries random_series(int height, int width, int channels,
                                               int n_days, std::uint64_t seed) {
    climreg::DailyFieldSeries s;
    s.geometry = {0.0, 0.0, 1.0, height, width};
    for (int c = 0; c < channels; ++c) {
        s.channel_names.push_back("ch" + std::to_string(c));
    }
    climreg::Rng rng(seed);
    climreg::Date d{2000, 1, 1};
    const std::size_t cells = static_cast<std::size_t>(height) * width;
    for (int i = 0; i < n_days; ++i) {
        climreg::DailyField f;
        f.date = d;
        f.values.resize(cells * channels);
        f.missing.assign(cells, 0);
        for (double& v : f.values) {
            // f32-representable so disk round-trips stay bitwise
            v = static_cast<double>(static_cast<float>(rng.uniform(-2.0, 2.0)));
        }
        s.fields.push_back(std::move(f));
        d = climreg::next_day(d);
    }
    return s;
}

/// Purity of predicted labels against ground truth: each predicted cluster
/// votes its majority true label.
inline double purity(const std::vector<int>& predicted, const std::vector<int>& truth) {
    std::map<int, std::map<int, long>> table;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        ++table[predicted[i]][truth[i]];
    }
    long correct = 0;
    for (const auto& [pred, votes] : table) {
        long best = 0;
        for (const auto& [t, n] : votes) {
            best = std::max(best, n);
        }
        correct += best;
    }
    return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

/// Majority-vote relabeling map, predicted cluster -> true label.
inline std::map<int, int> majority_relabel(const std::vector<int>& predicted,
                                           const std::vector<int>& truth) {
    std::map<int, std::map<int, long>> table;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        ++table[predicted[i]][truth[i]];
    }
    std::map<int, int> out;
    for (const auto& [pred, votes] : table) {
        int best_label = -1;
        long best = -1;
        for (const auto& [t, n] : votes) {
            if (n > best) {
                best = n;
                best_label = t;
            }
        }
        out[pred] = best_label;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma and the chi-squared independence test
// ---------------------------------------------------------------------------

inline double gamma_series(double a, double x) {
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 1; n < 500; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = b + an / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) {
            break;
        }
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

/// Regularized upper incomplete gamma Q(a, x).
inline double gammq(double a, double x) {
    if (x < 0.0 || a <= 0.0) {
        return 1.0;
    }
    if (x == 0.0) {
        return 1.0;
    }
    if (x < a + 1.0) {
        return 1.0 - gamma_series(a, x);
    }
    return gamma_cf(a, x);
}

/// Pearson chi-squared p-value for independence of a contingency table.
inline double chi_squared_independence_p(const std::vector<std::vector<long>>& table) {
    const std::size_t rows = table.size();
    const std::size_t cols = table[0].size();
    std::vector<double> row_tot(rows, 0.0), col_tot(cols, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            row_tot[r] += static_cast<double>(table[r][c]);
            col_tot[c] += static_cast<double>(table[r][c]);
            total += static_cast<double>(table[r][c]);
        }
    }
    double chi2 = 0.0;
    int dof = 0;
    int active_rows = 0, active_cols = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        active_rows += row_tot[r] > 0 ? 1 : 0;
    }
    for (std::size_t c = 0; c < cols; ++c) {
        active_cols += col_tot[c] > 0 ? 1 : 0;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double expected = row_tot[r] * col_tot[c] / total;
            if (expected > 0.0) {
                const double d = static_cast<double>(table[r][c]) - expected;
                chi2 += d * d / expected;
            }
        }
    }
    dof = (active_rows - 1) * (active_cols - 1);
    if (dof <= 0) {
        return 1.0;
    }
    return gammq(dof / 2.0, chi2 / 2.0);
}

/// Relative error between two gradient vectors: ||a-b|| / max(||a||, ||b||).
inline double gradient_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
    return std::sqrt(diff) / denom;
}

} // namespace testutil
