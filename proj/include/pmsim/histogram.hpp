#pragma once

// Square two-dimensional sample histogram over the IQ plane, with an exact
// text round-trip and an associative, commutative merge.

#include <complex>
#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

#include "pmsim/errors.hpp"
#include "pmsim/io_util.hpp"

namespace pmsim {

struct Histogram2D {
    double extent = 0; // each axis covers [-extent, extent]
    int bins = 0;
    std::vector<std::uint64_t> counts; // row-major, iy * bins + ix
    std::uint64_t total = 0;           // in-range samples
    std::uint64_t discards = 0;        // out-of-range samples

    Histogram2D() = default;
    Histogram2D(double extent_, int bins_) : extent(extent_), bins(bins_) {
        if (!(extent > 0) || bins < 1)
            throw InvalidParameter("Histogram2D: extent must be > 0 and bins >= 1");
        counts.assign(std::size_t(bins) * bins, 0);
    }

    bool compatible(const Histogram2D& o) const { return extent == o.extent && bins == o.bins; }

    // [-extent, extent] -> bin index; the top edge belongs to the last bin
    int axis_bin(double v) const {
        if (!(v >= -extent && v <= extent)) return -1;
        const int k = int((v + extent) / (2 * extent) * bins);
        return k < bins ? k : bins - 1;
    }

    void add(double x, double y) {
        const int ix = axis_bin(x), iy = axis_bin(y);
        if (ix < 0 || iy < 0) {
            ++discards;
            return;
        }
        ++counts[std::size_t(iy) * bins + ix];
        ++total;
    }
    void add(std::complex<double> z) { add(z.real(), z.imag()); }

    std::uint64_t at(int ix, int iy) const { return counts[std::size_t(iy) * bins + ix]; }
    double center(int k) const { return -extent + (2 * extent) * (k + 0.5) / bins; }
    double bin_width() const { return 2 * extent / bins; }
};

inline Histogram2D accumulate_histogram(const std::vector<std::complex<double>>& samples,
                                        double extent, int bins) {
    Histogram2D h(extent, bins);
    for (const auto& z : samples) h.add(z);
    return h;
}

inline Histogram2D merge_histograms(const Histogram2D& a, const Histogram2D& b) {
    if (!a.compatible(b))
        throw IncompatibleHistograms("merge_histograms: mismatched extent or bins");
    Histogram2D out = a;
    for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += b.counts[i];
    out.total += b.total;
    out.discards += b.discards;
    return out;
}

// Header line with the geometry and totals, then bins rows of bins counts.
// Row iy=0 is the bottom of the Q axis.
inline std::string to_text(const Histogram2D& h) {
    std::string s = "extent=" + fmt_double(h.extent) + " bins=" + std::to_string(h.bins) +
                    " total=" + std::to_string(h.total) +
                    " discards=" + std::to_string(h.discards) + "\n";
    for (int iy = 0; iy < h.bins; ++iy) {
        for (int ix = 0; ix < h.bins; ++ix) {
            if (ix) s += ' ';
            s += std::to_string(h.at(ix, iy));
        }
        s += '\n';
    }
    return s;
}

inline Histogram2D histogram_from_text(const std::string& text) {
    const std::vector<std::string> lines = split(text, '\n');
    if (lines.empty()) throw IoFailure("histogram_from_text: empty input");
    double extent = 0;
    long long bins = -1, total = -1, discards = -1;
    for (const std::string& tok : split(trim(lines[0]), ' ')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw IoFailure("histogram_from_text: malformed header token '" + tok + "'");
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "extent") extent = parse_double(val);
        else if (key == "bins") bins = parse_int(val);
        else if (key == "total") total = parse_int(val);
        else if (key == "discards") discards = parse_int(val);
        else throw IoFailure("histogram_from_text: unknown header key '" + key + "'");
    }
    if (bins < 1 || total < 0 || discards < 0 || !(extent > 0))
        throw IoFailure("histogram_from_text: incomplete header");
    Histogram2D h(extent, int(bins));
    std::uint64_t sum = 0;
    for (int iy = 0; iy < h.bins; ++iy) {
        if (std::size_t(iy) + 1 >= lines.size())
            throw IoFailure("histogram_from_text: missing rows");
        const std::vector<std::string> row = split(trim(lines[std::size_t(iy) + 1]), ' ');
        if (int(row.size()) != h.bins)
            throw IoFailure("histogram_from_text: row " + std::to_string(iy) + " has " +
                            std::to_string(row.size()) + " entries, expected " +
                            std::to_string(h.bins));
        for (int ix = 0; ix < h.bins; ++ix) {
            const long long c = parse_int(row[ix]);
            if (c < 0) throw IoFailure("histogram_from_text: negative count");
            h.counts[std::size_t(iy) * h.bins + ix] = std::uint64_t(c);
            sum += std::uint64_t(c);
        }
    }
    if (sum != std::uint64_t(total))
        throw IoFailure("histogram_from_text: counts sum to " + std::to_string(sum) +
                        ", header claims " + std::to_string(total));
    h.total = std::uint64_t(total);
    h.discards = std::uint64_t(discards);
    return h;
}

} // namespace pmsim
