#include "lfrr/gradcheck.hpp"

#include <cmath>
#include <numeric>

#include "lfrr/rng.hpp"

namespace lfrr {

GradCheckReport grad_check(const GraphFn& f, const std::vector<Tensor>& inputs, double tol,
                           std::int64_t max_probes, std::uint64_t seed) {
    std::vector<Tensor> work;
    work.reserve(inputs.size());
    for (const auto& t : inputs) work.emplace_back(t.shape, *t.data, true);

    auto forward = [&]() {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(work.size());
        for (auto& t : work) vars.push_back(tape.leaf(t));
        return tape.scalar(f(tape, vars));
    };

    // analytic gradients at the probe point
    std::vector<std::vector<double>> analytic;
    double f0 = 0.0;
    {
        Tape tape;
        std::vector<Var> vars;
        for (auto& t : work) {
            t.zero_grad();
            vars.push_back(tape.leaf(t));
        }
        Var loss = f(tape, vars);
        f0 = tape.scalar(loss);
        if (!std::isfinite(f0))
            throw NonFiniteGradient("loss is non-finite at the probe point");
        tape.backward(loss);
        for (auto& t : work) {
            analytic.push_back(*t.grad);
            for (double g : analytic.back())
                if (!std::isfinite(g)) throw NonFiniteGradient("analytic gradient is non-finite");
        }
    }

    const double h = 1e-6;
    // smallest gradient magnitude a central difference on this loss can
    // certify at tol (8 ulp of safety on the fp-fm cancellation)
    const double fd_noise = 8.0 * 2.220446049250313e-16 * std::max(1.0, std::abs(f0)) / (2.0 * h);
    const double resolve_floor = fd_noise / tol;
    GradCheckReport rep;
    for (std::size_t i = 0; i < work.size(); ++i) {
        const std::int64_t n = work[i].numel();
        std::vector<std::int64_t> coords;
        if (n <= max_probes) {
            coords.resize(static_cast<std::size_t>(n));
            std::iota(coords.begin(), coords.end(), 0);
        } else {
            Rng rng(seed, 1000 + static_cast<std::uint64_t>(i));
            coords.reserve(static_cast<std::size_t>(max_probes));
            for (std::int64_t j = 0; j < max_probes; ++j)
                coords.push_back(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n))));
        }
        for (std::int64_t c : coords) {
            double& slot = (*work[i].data)[static_cast<std::size_t>(c)];
            const double orig = slot;
            slot = orig + h;
            const double fp = forward();
            slot = orig - h;
            const double fm = forward();
            slot = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NonFiniteGradient("numeric probe produced a non-finite loss");
            const double num = (fp - fm) / (2.0 * h);
            const double ana = analytic[i][static_cast<std::size_t>(c)];
            if (std::abs(ana) + std::abs(num) < resolve_floor) {
                ++rep.coords_skipped;
                continue;
            }
            const double rel =
                std::abs(ana - num) / std::max(1e-8, std::abs(ana) + std::abs(num));
            if (rel > rep.max_rel_err) rep.max_rel_err = rel;
            ++rep.coords_checked;
        }
    }
    rep.pass = rep.max_rel_err <= tol;
    return rep;
}

}  // namespace lfrr
