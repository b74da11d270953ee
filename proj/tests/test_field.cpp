#include "otpsi/field.hpp"

#include <gtest/gtest.h>

#include <set>

#include "otpsi/common.hpp"

using namespace otpsi;

namespace {

constexpr uint64_t Q = Fe::kModulus;

// naive reference: full 128-bit product reduced by division
uint64_t mul_naive(uint64_t a, uint64_t b) {
    return uint64_t((unsigned __int128)a * b % Q);
}

TEST(Field, MulExamples) {
    EXPECT_EQ((Fe(3) * Fe(5)).value(), 15u);
    EXPECT_EQ((Fe(uint64_t(1) << 60) * Fe(2)).value(), 1u);  // 2^61 = 1 mod q
    EXPECT_EQ((Fe(Q - 1) * Fe(Q - 1)).value(), 1u);          // (-1)^2
}

TEST(Field, InverseExamples) {
    EXPECT_EQ(fe_inv(Fe(1)).value(), 1u);
    EXPECT_EQ(fe_inv(Fe(2)).value(), uint64_t(1) << 60);
    EXPECT_THROW(fe_inv(Fe(0)), ZeroInverse);
}

TEST(Field, MulMatchesNaiveOnRandomPairs) {
    Rng rng = Rng::from_u64(42);
    for (int i = 0; i < 200000; i++) {
        uint64_t a = rng.next_u64() % Q, b = rng.next_u64() % Q;
        ASSERT_EQ((Fe(a) * Fe(b)).value(), mul_naive(a, b)) << a << " * " << b;
    }
    // boundary values
    for (uint64_t a : {uint64_t(0), uint64_t(1), Q - 1, Q / 2, uint64_t(1) << 60})
        for (uint64_t b : {uint64_t(0), uint64_t(1), Q - 1, Q / 2, uint64_t(1) << 60})
            EXPECT_EQ((Fe(a) * Fe(b)).value(), mul_naive(a, b));
}

TEST(Field, AxiomsOnRandomTriples) {
    Rng rng = Rng::from_u64(7);
    for (int i = 0; i < 20000; i++) {
        Fe a(rng.next_u64()), b(rng.next_u64()), c(rng.next_u64());
        ASSERT_EQ((a * b) * c, a * (b * c));
        ASSERT_EQ(a * b, b * a);
        ASSERT_EQ(a + b, b + a);
        ASSERT_EQ((a + b) + c, a + (b + c));
        ASSERT_EQ(a * (b + c), a * b + a * c);
        ASSERT_EQ(a - a, Fe::zero());
        if (a != Fe::zero()) ASSERT_EQ(a * fe_inv(a), Fe::one());
    }
}

TEST(Field, LagrangeBasisExamples) {
    uint32_t two[] = {1, 2};
    auto basis = lagrange_basis_at_zero(two);
    EXPECT_EQ(basis.coefficients[0].value(), 2u);
    EXPECT_EQ(basis.coefficients[1].value(), Q - 1);

    uint32_t three[] = {1, 2, 3};
    basis = lagrange_basis_at_zero(three);
    EXPECT_EQ(basis.coefficients[0].value(), 3u);
    EXPECT_EQ(basis.coefficients[1].value(), Q - 3);
    EXPECT_EQ(basis.coefficients[2].value(), 1u);

    uint32_t dup[] = {1, 1};
    EXPECT_THROW(lagrange_basis_at_zero(dup), DuplicatePoint);
    uint32_t zero[] = {0, 1};
    EXPECT_THROW(lagrange_basis_at_zero(zero), DuplicatePoint);
}

TEST(Field, LagrangeBasisSumsToOne) {
    Rng rng = Rng::from_u64(11);
    for (int rep = 0; rep < 200; rep++) {
        size_t t = 1 + rng.below(10);
        std::set<uint32_t> pts;
        while (pts.size() < t) pts.insert(1 + uint32_t(rng.below(1000)));
        std::vector<uint32_t> points(pts.begin(), pts.end());
        auto basis = lagrange_basis_at_zero(points);
        Fe sum;
        for (Fe c : basis.coefficients) sum += c;
        ASSERT_EQ(sum, Fe::one());
    }
}

TEST(Field, ReconstructExamples) {
    uint32_t two[] = {1, 2};
    Fe s1[] = {Fe(5), Fe(10)};
    EXPECT_EQ(reconstruct_at_zero(lagrange_basis_at_zero(two), s1), Fe::zero());

    uint32_t three[] = {1, 2, 3};
    Fe s2[] = {Fe(2), Fe(6), Fe(12)};
    EXPECT_EQ(reconstruct_at_zero(lagrange_basis_at_zero(three), s2), Fe::zero());
    Fe s3[] = {Fe(7), Fe(11), Fe(17)};
    EXPECT_EQ(reconstruct_at_zero(lagrange_basis_at_zero(three), s3), Fe(5));

    Fe short_shares[] = {Fe(1)};
    EXPECT_THROW(reconstruct_at_zero(lagrange_basis_at_zero(three), short_shares), LengthMismatch);
}

TEST(Field, PolyEvalExamples) {
    EXPECT_EQ(poly_eval_no_constant({}, 99), Fe::zero());
    Fe lin[] = {Fe(4)};
    EXPECT_EQ(poly_eval_no_constant(lin, 3), Fe(12));
    Fe quad[] = {Fe(1), Fe(1)};
    EXPECT_EQ(poly_eval_no_constant(quad, 2), Fe(6));
}

// Round trip against the direct-evaluation oracle: random polynomials of
// degree t-1 with constant term v, reconstructed from any t of n points.
TEST(Field, ShamirRoundTripBruteForce) {
    Rng rng = Rng::from_u64(1234);
    for (int rep = 0; rep < 300; rep++) {
        uint32_t t = 1 + uint32_t(rng.below(10));
        uint32_t n = t + uint32_t(rng.below(5));
        Fe secret(rng.next_u64());
        std::vector<Fe> coeffs(t - 1);  // c_1 .. c_{t-1}
        for (auto& c : coeffs) c = Fe(rng.next_u64());

        auto eval = [&](uint64_t x) {  // direct polynomial evaluation oracle
            Fe acc = secret;
            Fe xp = Fe::one();
            for (const Fe& c : coeffs) {
                xp *= Fe(x);
                acc += c * xp;
            }
            return acc;
        };

        // random t-subset of {1..n}
        std::vector<uint32_t> ids(n);
        for (uint32_t i = 0; i < n; i++) ids[i] = i + 1;
        for (uint32_t i = 0; i < t; i++)
            std::swap(ids[i], ids[i + rng.below(n - i)]);
        ids.resize(t);

        std::vector<Fe> shares;
        for (uint32_t id : ids) shares.push_back(eval(id));
        EXPECT_EQ(reconstruct_at_zero(lagrange_basis_at_zero(ids), shares), secret);
    }
}

// Interpolating t points of which only t-1 lie on a common zero-constant
// polynomial: the result has no bias toward 0.
TEST(Field, SubThresholdInterpolationDoesNotYieldZero) {
    Rng rng = Rng::from_u64(99);
    int zeros = 0;
    const int trials = 20000;
    for (int rep = 0; rep < trials; rep++) {
        uint32_t t = 2 + uint32_t(rng.below(4));
        std::vector<Fe> coeffs(t - 1);
        for (auto& c : coeffs) c = Fe(rng.next_u64());
        std::vector<uint32_t> ids(t);
        std::vector<Fe> shares(t);
        for (uint32_t i = 0; i < t; i++) {
            ids[i] = i + 1;
            shares[i] = poly_eval_no_constant(coeffs, ids[i]);
        }
        shares[t - 1] = Fe(rng.next_u64());  // one share off the polynomial
        if (reconstruct_at_zero(lagrange_basis_at_zero(ids), shares) == Fe::zero()) zeros++;
    }
    EXPECT_LE(zeros, 2);  // expected rate ~ trials/q
}

TEST(Field, SerializationCanonical) {
    uint8_t buf[8];
    fe_store(buf, Fe(123456789));
    EXPECT_EQ(fe_load(buf).value(), 123456789u);
    put_u64_le(buf, Q);  // q itself is not canonical
    EXPECT_THROW(fe_load(buf), Error);
    put_u64_le(buf, UINT64_MAX);
    EXPECT_THROW(fe_load(buf), Error);
}

}  // namespace
