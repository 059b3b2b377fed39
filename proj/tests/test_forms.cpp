#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dendi/forms.hpp"
#include "dendi/rng.hpp"

using namespace dendi;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Dataset toy_dataset(const std::vector<double>& x) {
    Dataset data;
    const int n = static_cast<int>(x.size());
    data.y = Eigen::VectorXd::Zero(n);
    data.X.resize(n, 1);
    for (int i = 0; i < n; ++i) data.X(i, 0) = x[static_cast<size_t>(i)];
    data.Z.resize(n, 0);
    return data;
}

Dataset random_dataset(Rng& rng, int n, int p, double signal = 0.0) {
    Dataset data;
    data.y.resize(n);
    data.X.resize(n, p);
    data.Z.resize(n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) data.X(i, j) = rng.next_normal();
    for (int i = 0; i < n; ++i)
        data.y[i] = signal * data.X(i, 0) + rng.next_normal();
    return data;
}

}  // namespace

TEST_CASE("linear design has intercept and covariate columns") {
    Dataset data = toy_dataset({1, 2, 3});
    DesignMatrix d = build_design(Linear{0}, data);
    REQUIRE(d.cols() == 2);
    CHECK(d.values.col(0).isOnes());
    CHECK(d.values(0, 1) == 1.0);
    CHECK(d.values(2, 1) == 3.0);
    CHECK(d.column_labels[0] == "intercept");
    CHECK(d.column_labels[1] == "x1");
}

TEST_CASE("the hinge column of the same-variable multiplicative form") {
    Dataset data = toy_dataset({-1, 1});
    DesignMatrix d = build_design(MultiplicativeCombo{0, 0, 0.0}, data);
    REQUIRE(d.cols() == 3);
    CHECK(d.values(0, 2) == 0.0);
    CHECK(d.values(1, 2) == 1.0);
}

TEST_CASE("tree design reproduces the two-variable indicator structure") {
    Dataset data;
    data.y = Eigen::VectorXd::Zero(4);
    data.X.resize(4, 4);
    // (x3, x4) in all four sign quadrants; other columns inert
    data.X << 1, 1, 1, 1,
              1, 1, 1, -1,
              1, 1, -1, 1,
              1, 1, -1, -1;
    data.Z.resize(4, 0);
    DesignMatrix d = build_design(Tree{2, 0.0, SecondSplit{Node::Left, 3, 0.0}}, data);
    REQUIRE(d.cols() == 3);
    // I(x3 > 0)
    CHECK(d.values.col(1).transpose() == Eigen::RowVector4d(1, 1, 0, 0));
    // I(x3 <= 0 & x4 > 0)
    CHECK(d.values.col(2).transpose() == Eigen::RowVector4d(0, 0, 1, 0));
}

TEST_CASE("observations at the split value fall left") {
    Dataset data = toy_dataset({0.0, 0.5, 1.0});
    DesignMatrix d = build_design(PiecewiseConstant{0, 0.5}, data);
    CHECK(d.values(1, 1) == 0.0);
    CHECK(d.values(2, 1) == 1.0);
}

TEST_CASE("degenerate indicator columns are rejected") {
    Dataset data = toy_dataset({1, 2, 3, 4});
    CHECK_THROWS_AS(build_design(PiecewiseConstant{0, 10.0}, data),
                    DegenerateColumnError);
}

TEST_CASE("confounders are appended to every design") {
    Dataset data = toy_dataset({1, 2, 3});
    data.Z.resize(3, 1);
    data.Z << 5, 6, 7;
    data.z_names = {"age"};
    DesignMatrix null_design = build_design(NullForm{}, data);
    REQUIRE(null_design.cols() == 2);
    CHECK(null_design.column_labels[1] == "age");
    DesignMatrix lin_design = build_design(Linear{0}, data);
    REQUIRE(lin_design.cols() == 3);
    CHECK(lin_design.column_labels[2] == "age");
}

TEST_CASE("grid thresholds are the inner deciles of 1..100") {
    std::vector<double> x(100);
    for (int i = 0; i < 100; ++i) x[static_cast<size_t>(i)] = i + 1;
    Dataset data = toy_dataset(x);
    SplitGrid grid = make_grid(data, 0, 9, 5);
    REQUIRE(grid.thresholds.size() == 9);
    for (int i = 0; i < 9; ++i)
        CHECK(grid.thresholds[static_cast<size_t>(i)] == 10.0 * (i + 1));
}

TEST_CASE("nearly constant covariates yield an empty grid") {
    std::vector<double> x(100, 0.0);
    for (int i = 0; i < 5; ++i) x[static_cast<size_t>(95 + i)] = i + 1.0;
    Dataset data = toy_dataset(x);
    CHECK_THROWS_AS(make_grid(data, 0, 9, 10), EmptyGridError);
}

TEST_CASE("standard-normal samples admit all nine deciles") {
    Rng rng(123);
    Dataset data = random_dataset(rng, 800, 1);
    SplitGrid grid = make_grid(data, 0, 9, 10);
    CHECK(grid.thresholds.size() == 9);
    CHECK(std::is_sorted(grid.thresholds.begin(), grid.thresholds.end()));
}

TEST_CASE("single split search recovers a noiseless step") {
    Rng rng(7);
    Dataset data = random_dataset(rng, 200, 1);
    for (int i = 0; i < 200; ++i)
        data.y[i] = (data.X(i, 0) > 0.0 ? 1.0 : 0.0) + 1e-6 * rng.next_normal();
    SplitGrid grid = make_grid(data, 0, 9, 10);
    SearchResult r = search_single_split(PiecewiseConstant{0, kNaN}, data, {}, grid,
                                         Family::Gaussian);
    const auto& best = std::get<PiecewiseConstant>(r.best_form);
    // best split is the grid point nearest 0
    double nearest = grid.thresholds.front();
    for (double t : grid.thresholds)
        if (std::abs(t) < std::abs(nearest)) nearest = t;
    CHECK(best.c == nearest);
    CHECK(r.trace.size() == grid.thresholds.size());
}

TEST_CASE("single split search equals brute force with tie-break") {
    Rng rng(2024);
    for (int t = 0; t < 50; ++t) {
        const int n = 25 + static_cast<int>(rng.next_unit() * 35);
        Dataset data = random_dataset(rng, n, 2, 0.5);
        SplitGrid grid = make_grid(data, 0, 5, 4);
        SearchResult r = search_single_split(AdditiveCombo{0, kNaN}, data, {}, grid,
                                             Family::Gaussian);
        // independent exhaustive loop
        double best_dev = std::numeric_limits<double>::infinity();
        double best_c = kNaN;
        for (double c : grid.thresholds) {
            FitResult fit;
            try {
                fit = fit_irls(build_design(AdditiveCombo{0, c}, data), data.y,
                               Family::Gaussian);
            } catch (const DendiError&) {
                continue;
            }
            if (fit.deviance < best_dev) {
                best_dev = fit.deviance;
                best_c = c;
            }
        }
        CHECK(std::get<AdditiveCombo>(r.best_form).c == best_c);
        CHECK(r.fit.deviance == doctest::Approx(best_dev).epsilon(1e-12));
    }
}

TEST_CASE("second split search finds the scenario-5 structure") {
    Rng rng(55);
    Dataset data = random_dataset(rng, 800, 1);
    for (int i = 0; i < 800; ++i) {
        const double x = data.X(i, 0);
        data.y[i] = 1.0 - (x <= 0.0 ? 1.0 : 0.0) + 2.0 * (x > 0.675 ? 1.0 : 0.0) +
                    1e-3 * rng.next_normal();
    }
    const std::vector<int> vars{0};
    SearchResult r = search_second_split(PiecewiseConstant{0, 0.0}, data, {}, vars, 9,
                                         10, Family::Gaussian);
    const auto& tree = std::get<Tree>(r.best_form);
    CHECK(tree.second.node == Node::Right);
    CHECK(tree.second.c2 == doctest::Approx(0.675).epsilon(0.15));
}

TEST_CASE("second split search picks the interacting covariate") {
    // truth: step in x1 plus a second step active only where x1 > 0
    Rng rng(88);
    Dataset data = random_dataset(rng, 600, 2);
    for (int i = 0; i < 600; ++i) {
        const double x3 = data.X(i, 0), x4 = data.X(i, 1);
        data.y[i] = (x3 > 0 ? 1.0 : 0.0) + (x3 > 0 && x4 > 0 ? 2.0 : 0.0) +
                    0.5 * rng.next_normal();
    }
    const std::vector<int> vars{0, 1};
    SearchResult r = search_second_split(PiecewiseConstant{0, 0.0}, data, {}, vars, 9,
                                         10, Family::Gaussian);
    const auto& tree = std::get<Tree>(r.best_form);
    CHECK(tree.second.k == 1);
    CHECK(tree.second.node == Node::Right);
    CHECK(std::abs(tree.second.c2) < 0.4);
}

TEST_CASE("second split search equals brute force enumeration") {
    Rng rng(321);
    for (int t = 0; t < 50; ++t) {
        const int n = 40 + static_cast<int>(rng.next_unit() * 20);
        Dataset data = random_dataset(rng, n, 2, 0.8);
        const double base_c = data.X.col(0).mean();
        const std::vector<int> vars{0, 1};
        SearchResult got;
        try {
            got = search_second_split(PiecewiseConstant{0, base_c}, data, {}, vars, 4, 5,
                                      Family::Gaussian);
        } catch (const AllCandidatesDegenerateError&) {
            continue;
        }

        // independent enumeration with the documented tie-break order
        double best_dev = std::numeric_limits<double>::infinity();
        FormSpec best_form = NullForm{};
        for (int k : vars) {
            for (Node node : {Node::Left, Node::Right}) {
                std::vector<double> node_values;
                for (int i = 0; i < n; ++i) {
                    const bool left = data.X(i, 0) <= base_c;
                    if (left == (node == Node::Left))
                        node_values.push_back(data.X(i, k));
                }
                Eigen::VectorXd nv(node_values.size());
                for (size_t i = 0; i < node_values.size(); ++i)
                    nv[static_cast<Eigen::Index>(i)] = node_values[i];
                SplitGrid grid;
                try {
                    grid = make_grid_values(nv, k, 4, 5);
                } catch (const EmptyGridError&) {
                    continue;
                }
                for (double c2 : grid.thresholds) {
                    if (k == 0 && node == Node::Left && !(c2 < base_c)) continue;
                    if (k == 0 && node == Node::Right && !(c2 > base_c)) continue;
                    FormSpec cand = Tree{0, base_c, SecondSplit{node, k, c2}};
                    FitResult fit;
                    try {
                        fit = fit_irls(build_design(cand, data), data.y, Family::Gaussian);
                    } catch (const DendiError&) {
                        continue;
                    }
                    if (fit.deviance < best_dev) {
                        best_dev = fit.deviance;
                        best_form = cand;
                    }
                }
            }
        }
        const auto& a = std::get<Tree>(got.best_form);
        const auto& b = std::get<Tree>(best_form);
        CHECK(a.second.k == b.second.k);
        CHECK(a.second.node == b.second.node);
        CHECK(a.second.c2 == b.second.c2);
        CHECK(got.fit.deviance == doctest::Approx(best_dev).epsilon(1e-12));
    }
}

TEST_CASE("second split admissibility bookkeeping on tiny nodes") {
    Rng rng(9);
    Dataset data = random_dataset(rng, 25, 1);
    std::vector<double> sorted(data.X.col(0).data(), data.X.col(0).data() + 25);
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[12];
    const std::vector<int> vars{0};
    // both nodes are smaller than 2 * min_node, so nothing is admissible
    CHECK_THROWS_AS(search_second_split(PiecewiseConstant{0, median}, data, {}, vars, 9,
                                        10, Family::Gaussian),
                    AllCandidatesDegenerateError);

    Dataset bigger = random_dataset(rng, 45, 1);
    std::vector<double> s2(bigger.X.col(0).data(), bigger.X.col(0).data() + 45);
    std::sort(s2.begin(), s2.end());
    SearchResult r = search_second_split(PiecewiseConstant{0, s2[22]}, bigger, {}, vars,
                                         9, 10, Family::Gaussian);
    for (const SearchCandidate& cand : r.trace) {
        const auto& tree = std::get<Tree>(cand.form);
        int node_count = 0, below = 0;
        for (int i = 0; i < 45; ++i) {
            const double xj = bigger.X(i, 0);
            const bool in_node =
                tree.second.node == Node::Left ? xj <= tree.c : xj > tree.c;
            if (!in_node) continue;
            ++node_count;
            if (bigger.X(i, tree.second.k) <= tree.second.c2) ++below;
        }
        CHECK(below >= 10);
        CHECK(node_count - below >= 10);
    }
}

TEST_CASE("nesting: richer families never fit worse") {
    Rng rng(77);
    for (int t = 0; t < 20; ++t) {
        Dataset data = random_dataset(rng, 120, 1, 0.7);
        SplitGrid grid = make_grid(data, 0, 9, 10);

        FitResult linear = fit_irls(build_design(Linear{0}, data), data.y, Family::Gaussian);
        SearchResult pc = search_single_split(PiecewiseConstant{0, kNaN}, data, {}, grid,
                                              Family::Gaussian);
        SearchResult add = search_single_split(AdditiveCombo{0, kNaN}, data, {}, grid,
                                               Family::Gaussian);
        SearchResult mult = search_single_split(MultiplicativeCombo{0, 0, kNaN}, data, {},
                                                grid, Family::Gaussian);

        CHECK(add.fit.deviance <= pc.fit.deviance + 1e-9);
        CHECK(add.fit.deviance <= linear.deviance + 1e-9);
        CHECK(mult.fit.deviance <= linear.deviance + 1e-9);

        const auto& base = std::get<PiecewiseConstant>(pc.best_form);
        try {
            SearchResult tree = search_second_split(base, data, {}, std::vector<int>{0},
                                                    9, 10, Family::Gaussian);
            CHECK(tree.fit.deviance <= pc.fit.deviance + 1e-9);
        } catch (const AllCandidatesDegenerateError&) {
        }
    }
}

TEST_CASE("the two slope-break parameterizations are the same function") {
    // identity between the hinge form b0 + b1 x + b2 I(x>c)(x-c) and the
    // segment form b0* + b11 I(x<=c)x + b12* I(x>c)x with
    // b0* = b0 - b2 I(x>c) c and b12* = b1 + b2
    Rng rng(31);
    for (int t = 0; t < 20; ++t) {
        Dataset data = random_dataset(rng, 80, 1, 0.5);
        SplitGrid grid = make_grid(data, 0, 5, 8);
        const double c = grid.thresholds[2];
        FitResult hinge = fit_irls(build_design(MultiplicativeCombo{0, 0, c}, data),
                                   data.y, Family::Gaussian);
        const double b0 = hinge.coefficients[0];
        const double b1 = hinge.coefficients[1];
        const double b2 = hinge.coefficients[2];
        for (int i = 0; i < 80; ++i) {
            const double x = data.X(i, 0);
            const double above = x > c ? 1.0 : 0.0;
            const double segment_eta = (b0 - b2 * above * c) + b1 * (1.0 - above) * x +
                                       (b1 + b2) * above * x;
            CHECK(hinge.eta[i] == doctest::Approx(segment_eta).epsilon(1e-8));
        }
    }
}

TEST_CASE("with a split at zero the two parameterizations fit identically") {
    // at c = 0 the segment basis spans the hinge basis, so even two
    // unconstrained fits agree
    Rng rng(37);
    Dataset data = random_dataset(rng, 80, 1, 0.5);
    FitResult hinge = fit_irls(build_design(MultiplicativeCombo{0, 0, 0.0}, data),
                               data.y, Family::Gaussian);
    DesignMatrix seg;
    seg.values.resize(80, 3);
    seg.values.col(0).setOnes();
    for (int i = 0; i < 80; ++i) {
        const double x = data.X(i, 0);
        seg.values(i, 1) = x <= 0.0 ? x : 0.0;
        seg.values(i, 2) = x > 0.0 ? x : 0.0;
    }
    seg.column_labels = {"intercept", "lo", "hi"};
    FitResult segment = fit_irls(seg, data.y, Family::Gaussian);
    for (int i = 0; i < 80; ++i)
        CHECK(hinge.eta[i] == doctest::Approx(segment.eta[i]).epsilon(1e-8));
}

TEST_CASE("fitted slope-break predictor is continuous at its split") {
    Rng rng(13);
    Dataset data = random_dataset(rng, 150, 1, 0.5);
    for (int i = 0; i < 150; ++i)
        data.y[i] += (data.X(i, 0) > 0 ? 1.5 * data.X(i, 0) : 0.0);
    SplitGrid grid = make_grid(data, 0, 9, 10);
    SearchResult r = search_single_split(MultiplicativeCombo{0, 0, kNaN}, data, {}, grid,
                                         Family::Gaussian);
    const auto& form = std::get<MultiplicativeCombo>(r.best_form);
    const double c = form.c;
    const double eps = 1e-9;
    auto eta_at = [&](double x) {
        const double hinge = x > c ? x - c : 0.0;
        return r.fit.coefficients[0] + r.fit.coefficients[1] * x +
               r.fit.coefficients[2] * hinge;
    };
    const double gap = std::abs(eta_at(c + eps) - eta_at(c - eps));
    CHECK(gap <= 1e-8 * (1.0 + std::abs(eta_at(c))));
}

TEST_CASE("monotone transforms leave indicator-based deviances unchanged") {
    Rng rng(101);
    Dataset data = random_dataset(rng, 200, 1, 0.6);
    Dataset warped = data;
    for (int i = 0; i < 200; ++i)
        warped.X(i, 0) = std::exp(data.X(i, 0)) + 3.0 * data.X(i, 0);

    SplitGrid g1 = make_grid(data, 0, 9, 10);
    SplitGrid g2 = make_grid(warped, 0, 9, 10);
    SearchResult p1 = search_single_split(PiecewiseConstant{0, std::nan("")}, data, {},
                                          g1, Family::Gaussian);
    SearchResult p2 = search_single_split(PiecewiseConstant{0, std::nan("")}, warped, {},
                                          g2, Family::Gaussian);
    CHECK(p1.fit.deviance == doctest::Approx(p2.fit.deviance).epsilon(1e-12));

    const auto& b1 = std::get<PiecewiseConstant>(p1.best_form);
    const auto& b2 = std::get<PiecewiseConstant>(p2.best_form);
    SearchResult t1 = search_second_split(b1, data, {}, std::vector<int>{0}, 9, 10,
                                          Family::Gaussian);
    SearchResult t2 = search_second_split(b2, warped, {}, std::vector<int>{0}, 9, 10,
                                          Family::Gaussian);
    CHECK(t1.fit.deviance == doctest::Approx(t2.fit.deviance).epsilon(1e-12));
}

TEST_CASE("form descriptions name what the form does") {
    Dataset data = toy_dataset({1, 2, 3});
    CHECK(describe(NullForm{}, data) == "no effect detected");
    CHECK(describe(Linear{0}, data) == "linear");
    CHECK(describe(PiecewiseConstant{0, 0.5}, data) ==
          "piecewise constant with split at 0.5");
    CHECK(kind_letter(kind_of(FormSpec{Tree{0, 0.5, SecondSplit{Node::Left, 0, 0.1}}})) ==
          'T');
}
