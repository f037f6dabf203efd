#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "adarf/error.hpp"
#include "adarf/sampling.hpp"
#include "support.hpp"

using namespace adarf;
using testing::make_dataset;

namespace {

std::vector<std::size_t> counts_of(const Dataset& ds) { return ds.class_counts(); }

// Euclidean distance ranks computed directly, ties by index.
std::vector<std::size_t> nearest(const Dataset& ds, std::size_t q, std::size_t k, const std::vector<bool>* allowed) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t r = 0; r < ds.size(); ++r) {
        if (r == q || (allowed && !(*allowed)[r])) continue;
        double s = 0;
        for (std::size_t c = 0; c < ds.n_features(); ++c) s += std::pow(ds.features(r, c) - ds.features(q, c), 2);
        d.emplace_back(s, r);
    }
    std::sort(d.begin(), d.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(k, d.size()); ++i) out.push_back(d[i].second);
    return out;
}

// Largest-remainder apportionment written from the definition with exact
// integer fractions.
std::vector<std::size_t> apportion_oracle(const std::vector<std::size_t>& w, std::size_t total) {
    std::size_t sum = std::accumulate(w.begin(), w.end(), std::size_t{0});
    std::vector<std::size_t> weights = w;
    if (sum == 0) {
        weights.assign(w.size(), 1);
        sum = w.size();
    }
    std::vector<std::size_t> g(w.size());
    std::vector<std::pair<long long, std::size_t>> rem;
    std::size_t given = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        g[i] = weights[i] * total / sum;
        given += g[i];
        rem.emplace_back(-static_cast<long long>(weights[i] * total % sum), i);
    }
    std::sort(rem.begin(), rem.end());
    for (std::size_t i = 0; given < total; ++i, ++given) ++g[rem[i].second];
    return g;
}

struct PlanOracle {
    std::size_t G;
    std::vector<std::size_t> delta;
    std::vector<std::size_t> g;
};

PlanOracle plan_oracle(const Dataset& ds, ClassId minority, std::size_t target, std::size_t K) {
    PlanOracle p;
    std::size_t ms = 0;
    for (auto y : ds.labels) ms += y == minority;
    p.G = target - ms;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] != minority) continue;
        std::size_t d = 0;
        for (auto j : nearest(ds, i, K, nullptr)) d += ds.labels[j] != minority;
        p.delta.push_back(d);
    }
    p.g = apportion_oracle(p.delta, p.G);
    return p;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
            for (std::size_t t = i; t < j; ++t) r[idx[t]] = (i + j - 1) / 2.0;
            i = j;
        }
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

void check_convex(const Dataset& in, const ResampleResult& out) {
    REQUIRE(out.records.size() == out.data.size() - in.size());
    for (std::size_t s = 0; s < out.records.size(); ++s) {
        const auto& rec = out.records[s];
        const auto row = out.data.features.row(in.size() + s);
        CHECK(rec.gamma >= 0.0);
        CHECK(rec.gamma <= 1.0);
        CHECK(in.labels[rec.parent_index] == rec.class_id);
        CHECK(in.labels[rec.neighbor_index] == rec.class_id);
        CHECK(out.data.labels[in.size() + s] == rec.class_id);
        CHECK(out.origin[in.size() + s] == rec.parent_index);
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double xi = in.features(rec.parent_index, c), xz = in.features(rec.neighbor_index, c);
            CHECK(row[c] >= std::min(xi, xz));
            CHECK(row[c] <= std::max(xi, xz));
            const double formula = xi + (xz - xi) * rec.gamma;
            if (formula >= std::min(xi, xz) && formula <= std::max(xi, xz)) CHECK(row[c] == formula);
        }
    }
}

void check_originals_first(const Dataset& in, const ResampleResult& out) {
    for (std::size_t r = 0; r < in.size(); ++r) {
        CHECK(out.data.labels[r] == in.labels[r]);
        CHECK(out.origin[r] == r);
        for (std::size_t c = 0; c < in.n_features(); ++c) CHECK(out.data.features(r, c) == in.features(r, c));
    }
}

Dataset two_blobs(std::size_t major, std::size_t minor, double distance, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> rows;
    std::vector<ClassId> y;
    for (std::size_t i = 0; i < major; ++i) {
        rows.push_back({g(rng), g(rng)});
        y.push_back(0);
    }
    for (std::size_t i = 0; i < minor; ++i) {
        rows.push_back({g(rng) + distance, g(rng)});
        y.push_back(1);
    }
    return make_dataset(rows, y, {"major", "minor"});
}

}  // namespace

TEST_SUITE("random_undersample") {
    TEST_CASE("keeps exactly the target, untargeted classes untouched, order preserved") {
        Rng rng(1);
        const auto ds = testing::random_dataset(rng, 300, 2, 3);
        const auto before = counts_of(ds);
        const auto out = random_undersample(ds, SamplingStrategy::counts({{"c0", 20}}, 5));
        const auto after = counts_of(out.data);
        CHECK(after[0] == 20);
        CHECK(after[1] == before[1]);
        CHECK(after[2] == before[2]);
        CHECK(std::is_sorted(out.origin.begin(), out.origin.end()));
        for (std::size_t i = 0; i < out.origin.size(); ++i) CHECK(out.data.labels[i] == ds.labels[out.origin[i]]);
    }

    TEST_CASE("target equal to the count leaves the class unchanged") {
        Rng rng(2);
        const auto ds = testing::random_dataset(rng, 50, 2, 2);
        const auto out = random_undersample(ds, SamplingStrategy::counts({{"c1", counts_of(ds)[1]}}, 3));
        CHECK(out.data == ds);
    }

    TEST_CASE("class of 10 to target 3: two seeds, both size 3, subsets generally differ") {
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < 10; ++i) rows.push_back({static_cast<double>(i)});
        const auto ds = make_dataset(rows, std::vector<ClassId>(10, 0));
        std::set<std::vector<std::size_t>> distinct;
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            const auto out = random_undersample(ds, SamplingStrategy::counts({{"c0", 3}}, seed));
            CHECK(out.data.size() == 3);
            distinct.insert(out.origin);
        }
        CHECK(distinct.size() > 1);
    }

    TEST_CASE("subset is uniform: every row kept about equally often") {
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < 10; ++i) rows.push_back({static_cast<double>(i)});
        const auto ds = make_dataset(rows, std::vector<ClassId>(10, 0));
        std::vector<int> hits(10, 0);
        for (std::uint64_t seed = 0; seed < 2000; ++seed)
            for (auto r : random_undersample(ds, SamplingStrategy::counts({{"c0", 3}}, seed)).origin) ++hits[r];
        for (int h : hits) CHECK(std::abs(h - 600) < 90);
    }

    TEST_CASE("errors") {
        const auto ds = make_dataset({{1}, {2}, {3}}, {0, 0, 1});
        CHECK_THROWS_AS(random_undersample(ds, SamplingStrategy::counts({{"c0", 3}})), ConfigError);
        CHECK_THROWS_AS(random_undersample(ds, SamplingStrategy::counts({{"zz", 1}})), ConfigError);
        CHECK_THROWS_AS(random_undersample(ds, SamplingStrategy::ratio(1.0)), ConfigError);
    }
}

TEST_SUITE("smote") {
    TEST_CASE("minority of 4 to target 8: each parent used once") {
        const auto ds = make_dataset({{0, 0}, {9, 9}, {1, 0}, {0, 1}, {8, 8}, {1, 1}, {9, 8}}, {0, 1, 0, 0, 1, 0, 1});
        const auto out = smote(ds, SamplingStrategy::counts({{"c0", 8}}, 4));
        CHECK(counts_of(out.data)[0] == 8);
        std::multiset<std::size_t> parents;
        for (const auto& r : out.records) parents.insert(r.parent_index);
        CHECK(parents == std::multiset<std::size_t>{0, 2, 3, 5});
        check_convex(ds, out);
        check_originals_first(ds, out);
    }

    TEST_CASE("parents at (0,0) and (1,1): synthetic coordinates equal and inside [0,1]") {
        const auto ds = make_dataset({{0, 0}, {1, 1}, {5, 7}, {6, 7}, {7, 5}}, {0, 0, 1, 1, 1});
        const auto out = smote(ds, SamplingStrategy::counts({{"c0", 40}}, 9));
        for (std::size_t r = ds.size(); r < out.data.size(); ++r) {
            CHECK(out.data.features(r, 0) == out.data.features(r, 1));
            CHECK(out.data.features(r, 0) >= 0.0);
            CHECK(out.data.features(r, 0) <= 1.0);
        }
    }

    TEST_CASE("target equal to the class size adds nothing") {
        const auto ds = make_dataset({{0}, {1}, {2}}, {0, 0, 1});
        const auto out = smote(ds, SamplingStrategy::counts({{"c0", 2}}));
        CHECK(out.records.empty());
        CHECK(out.data == ds);
    }

    TEST_CASE("parent usage differs by at most one; deterministic under seed") {
        Rng rng(3);
        const auto ds = testing::random_dataset(rng, 200, 3, 3);
        const auto s = SamplingStrategy::counts({{"c1", 157}, {"c2", 301}}, 21);
        const auto a = smote(ds, s);
        const auto b = smote(ds, s);
        CHECK(a.data == b.data);
        CHECK(a.records == b.records);
        for (ClassId c : {1u, 2u}) {
            std::map<std::size_t, std::size_t> use;
            for (std::size_t i = 0; i < ds.size(); ++i)
                if (ds.labels[i] == c) use[i] = 0;
            for (const auto& r : a.records)
                if (r.class_id == c) ++use[r.parent_index];
            std::size_t lo = SIZE_MAX, hi = 0;
            for (auto [row, n] : use) {
                lo = std::min(lo, n);
                hi = std::max(hi, n);
            }
            CHECK(hi - lo <= 1);
        }
        CHECK(counts_of(a.data)[1] == 157);
        CHECK(counts_of(a.data)[2] == 301);
        check_convex(ds, a);
    }

    TEST_CASE("neighbours come from the parent's K nearest same-class rows") {
        Rng rng(4);
        const auto ds = testing::random_dataset(rng, 120, 2, 2);
        const auto out = smote(ds, SamplingStrategy::counts({{"c1", 200}}, 2, 3));
        std::vector<bool> mask(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) mask[i] = ds.labels[i] == 1;
        for (const auto& r : out.records) {
            const auto pool = nearest(ds, r.parent_index, 3, &mask);
            CHECK(std::find(pool.begin(), pool.end(), r.neighbor_index) != pool.end());
        }
    }

    TEST_CASE("a class with one row cannot be interpolated") {
        const auto ds = make_dataset({{0}, {1}, {2}}, {0, 0, 1});
        CHECK_THROWS_AS(smote(ds, SamplingStrategy::counts({{"c1", 5}})), DataError);
        CHECK_THROWS_AS(smote(ds, SamplingStrategy::counts({{"c0", 1}})), ConfigError);
    }
}

TEST_SUITE("adasyn") {
    TEST_CASE("m_l = 1000, m_s = 100, beta = 1 gives G = 900") {
        const auto ds = two_blobs(1000, 100, 2.0, 1);
        const auto plan = adasyn_plan(ds, 1, SamplingStrategy::ratio(1.0));
        CHECK(plan.majority_count == 1000);
        CHECK(plan.minority_count == 100);
        CHECK(plan.total_to_generate == 900);
        CHECK(adasyn_plan(ds, 1, SamplingStrategy::ratio(0.5)).total_to_generate == 450);
        CHECK(adasyn_plan(ds, 1, SamplingStrategy::ratio(0.0)).total_to_generate == 0);
    }

    TEST_CASE("three majority rows among the five nearest gives r = 0.6") {
        // minority at 0, 1.5, 2.5; majority at 1, 2, 3 and far away
        const auto ds = make_dataset({{0}, {1}, {1.5}, {2}, {2.5}, {3}, {100}, {101}, {102}},
                                     {1, 0, 1, 0, 1, 0, 0, 0, 0});
        const auto plan = adasyn_plan(ds, 1, SamplingStrategy::counts({{"c1", 10}}));
        REQUIRE(plan.parents.front() == 0);
        CHECK(plan.delta.front() == 3);
        CHECK(plan.ratio.front() == doctest::Approx(0.6));
    }

    TEST_CASE("r = (0.2, 0.4, 0.4) with G = 10 apportions to (2, 4, 4)") {
        CHECK(apportion({1, 2, 2}, 10) == std::vector<std::size_t>{2, 4, 4});
        CHECK(apportion({1, 1, 1}, 10) == std::vector<std::size_t>{4, 3, 3});
        CHECK(apportion({0, 0}, 3) == std::vector<std::size_t>{2, 1});
        CHECK(apportion({5}, 0) == std::vector<std::size_t>{0});
    }

    TEST_CASE("apportionment matches the fraction oracle and is monotone") {
        Rng rng(77);
        for (int t = 0; t < 500; ++t) {
            std::vector<std::size_t> w(1 + uniform_index(rng, 12));
            for (auto& x : w) x = uniform_index(rng, 6);
            const std::size_t total = uniform_index(rng, 300);
            const auto g = apportion(w, total);
            CHECK(g == apportion_oracle(w, total));
            CHECK(std::accumulate(g.begin(), g.end(), std::size_t{0}) == total);
            for (std::size_t i = 0; i < w.size(); ++i)
                for (std::size_t j = 0; j < w.size(); ++j)
                    if (w[i] > w[j]) CHECK(g[i] >= g[j]);
        }
    }

    TEST_CASE("isolated minority falls back to uniform weights") {
        const auto ds = make_dataset({{0}, {0.1}, {0.2}, {0.3}, {0.4}, {0.5}, {100}, {101}, {102}},
                                     {1, 1, 1, 1, 1, 1, 0, 0, 0});
        const auto out = adasyn(ds, SamplingStrategy::counts({{"c1", 18}}, 3));
        REQUIRE(out.plans.size() == 1);
        const auto& plan = out.plans[0];
        CHECK(plan.uniform_fallback);
        for (double w : plan.weight) CHECK(w == doctest::Approx(1.0 / 6));
        CHECK(plan.generate == std::vector<std::size_t>(6, 2));
        CHECK(counts_of(out.data)[1] == 18);
    }

    TEST_CASE("two blobs 900 vs 100, beta = 1: 800 synthetic rows, density follows delta") {
        const auto ds = two_blobs(900, 100, 1.5, 5);
        const auto out = adasyn(ds, SamplingStrategy::ratio(1.0, 8));
        REQUIRE(out.plans.size() == 1);
        const auto& plan = out.plans[0];
        CHECK(plan.total_to_generate == 800);
        CHECK(out.records.size() == 800);
        CHECK(counts_of(out.data)[1] == 900);
        std::vector<double> g(plan.generate.begin(), plan.generate.end());
        std::vector<double> d(plan.delta.begin(), plan.delta.end());
        CHECK(spearman(g, d) > 0.5);
    }

    TEST_CASE("plan matches a direct re-implementation of the weighting steps") {
        Rng rng(31);
        for (int t = 0; t < 30; ++t) {
            const auto ds = testing::random_dataset(rng, 80 + uniform_index(rng, 60), 3, 3, t % 3 == 0);
            const auto counts = counts_of(ds);
            const std::size_t target = counts[2] + uniform_index(rng, 50);
            const std::size_t K = 1 + uniform_index(rng, 6);
            const auto plan = adasyn_plan(ds, 2, SamplingStrategy::counts({{"c2", target}}, 0, K));
            const auto want = plan_oracle(ds, 2, target, K);
            CHECK(plan.total_to_generate == want.G);
            CHECK(plan.delta == want.delta);
            CHECK(plan.generate == want.g);
            const double rsum = std::accumulate(plan.ratio.begin(), plan.ratio.end(), 0.0);
            if (rsum > 0) CHECK(std::accumulate(plan.weight.begin(), plan.weight.end(), 0.0) == doctest::Approx(1.0));
            for (std::size_t i = 0; i < plan.ratio.size(); ++i) {
                CHECK(plan.ratio[i] >= 0.0);
                CHECK(plan.ratio[i] <= 1.0);
            }
        }
    }

    TEST_CASE("synthesis matches an independent replay of the random stream") {
        Rng rng(12);
        const auto ds = testing::random_dataset(rng, 150, 3, 3);
        const auto counts = counts_of(ds);
        const auto s = SamplingStrategy::counts({{"c1", counts[1] + 40}, {"c2", counts[2] + 25}}, 99, 4);
        const auto out = adasyn(ds, s);

        Rng replay(99);
        std::vector<SynthesisRecord> want;
        for (ClassId c : {1u, 2u}) {
            const auto p = plan_oracle(ds, c, c == 1 ? counts[1] + 40 : counts[2] + 25, 4);
            std::vector<bool> mask(ds.size());
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < ds.size(); ++i) {
                mask[i] = ds.labels[i] == c;
                if (mask[i]) members.push_back(i);
            }
            for (std::size_t i = 0; i < members.size(); ++i) {
                if (p.g[i] == 0) continue;
                const auto pool = nearest(ds, members[i], 4, &mask);
                for (std::size_t k = 0; k < p.g[i]; ++k) {
                    const std::size_t z = pool[uniform_index(replay, pool.size())];
                    want.push_back({members[i], z, uniform_unit(replay), c});
                }
            }
        }
        CHECK(out.records == want);
        check_convex(ds, out);
    }

    TEST_CASE("errors") {
        const auto ds = make_dataset({{0}, {1}, {2}, {3}}, {0, 0, 0, 1});
        CHECK_THROWS_AS(adasyn(ds, SamplingStrategy::counts({{"c0", 2}})), ConfigError);
        CHECK_THROWS_AS(adasyn(ds, SamplingStrategy::counts({{"c1", 3}})), DataError);
        CHECK_THROWS_AS(adasyn(ds, SamplingStrategy::counts({{"nope", 3}})), ConfigError);
        CHECK_NOTHROW(adasyn(ds, SamplingStrategy::counts({{"c1", 1}})));
        const auto one_class = make_dataset({{0}, {1}}, {0, 0});
        CHECK_THROWS_AS(adasyn_plan(one_class, 0, SamplingStrategy::ratio(1.0)), DataError);
    }

    TEST_CASE("records and plans export to JSON") {
        const auto ds = two_blobs(30, 6, 1.0, 2);
        const auto out = adasyn(ds, SamplingStrategy::counts({{"minor", 10}}, 1));
        const auto rec = to_json(out.records);
        REQUIRE(rec.size() == 4);
        CHECK(rec[0].contains("parent_index"));
        CHECK(rec[0].contains("gamma"));
        const auto plan = to_json(out.plans[0]);
        CHECK(plan["total_to_generate"] == 4);
    }
}
