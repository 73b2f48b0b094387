#ifndef MSCOPE_EXACT_SUM_HPP
#define MSCOPE_EXACT_SUM_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace mscope {

/// Correctly rounded floating-point summation (Shewchuk partials, with the
/// half-even fix-up used by Python's math.fsum).
///
/// The result depends only on the multiset of addends, never on their order.
/// Distance computations rely on this so that permuting coordinates (e.g. a
/// sub-pixel shuffle) reproduces distances bit for bit.
class ExactAccumulator {
public:
    void add(double x)
    {
        std::size_t used = 0;
        for (std::size_t i = 0; i < count_; ++i) {
            double y = partials_[i];
            if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials_[used++] = lo;
            x = hi;
        }
        if (used == partials_.size()) partials_.push_back(x);
        else partials_[used] = x;
        count_ = used + 1;
    }

    void clear() { count_ = 0; }

    double result() const
    {
        if (count_ == 0) return 0.0;
        std::size_t n = count_;
        double hi = partials_[--n];
        double lo = 0.0;
        while (n > 0) {
            const double x = hi;
            const double y = partials_[--n];
            hi = x + y;
            const double yr = hi - x;
            lo = y - yr;
            if (lo != 0.0) break;
        }
        // Round-half-even correction when the remaining tail has the same sign.
        if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
            const double y = lo * 2.0;
            const double x = hi + y;
            const double yr = x - hi;
            if (y == yr) hi = x;
        }
        return hi;
    }

private:
    // Storage is kept across clear() so a reused accumulator stops allocating.
    std::vector<double> partials_ = std::vector<double>(16);
    std::size_t count_ = 0;
};

/// Correctly rounded sum of a range of doubles.
template <typename Range>
double exact_sum(const Range& values)
{
    ExactAccumulator acc;
    for (double v : values) acc.add(v);
    return acc.result();
}

}  // namespace mscope

#endif  // MSCOPE_EXACT_SUM_HPP
