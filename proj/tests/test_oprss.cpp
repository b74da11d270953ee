#include "otpsi/oprss.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace otpsi;

namespace {

SessionParams make_params(uint16_t t, uint64_t m, uint16_t tables, uint16_t k) {
    SessionParams p;
    p.n_participants = std::max<uint32_t>(t, 3);
    p.threshold = t;
    p.max_set_size = m;
    p.table_count = tables;
    p.n_key_holders = k;
    p.round_id = 5;
    p.deployment = Deployment::CollusionSafe;
    return p;
}

std::vector<oprf::OprfKeyShare> make_holders(uint16_t k, uint16_t t, uint64_t seed) {
    Rng rng = Rng::from_u64(seed);
    std::vector<oprf::OprfKeyShare> out;
    for (uint16_t j = 1; j <= k; j++) out.push_back(oprf::OprfKeyShare::random(j, t, rng));
    return out;
}

TEST(Oprss, SharesOfSameElementReconstructZero) {
    Rng rng = Rng::from_u64(1);
    auto holders = make_holders(2, 3, 99);
    Element s = *Element::parse_ip("192.0.2.7");
    std::vector<uint32_t> ids = {1, 2, 3};
    std::vector<Fe> shares;
    for (uint32_t id : ids) shares.push_back(oprss::oprss_share(s, id, 4, 11, holders, 3, rng));
    EXPECT_EQ(reconstruct_at_zero(lagrange_basis_at_zero(ids), shares), Fe::zero());

    // different element mixed in: almost surely nonzero
    shares[0] = oprss::oprss_share(*Element::parse_ip("192.0.2.8"), 1, 4, 11, holders, 3, rng);
    EXPECT_NE(reconstruct_at_zero(lagrange_basis_at_zero(ids), shares), Fe::zero());
}

TEST(Oprss, ThresholdOneShareIsZero) {
    Rng rng = Rng::from_u64(2);
    auto holders = make_holders(1, 1, 7);
    EXPECT_EQ(oprss::oprss_share(Element::from_u64(5), 2, 1, 1, holders, 1, rng), Fe::zero());
}

TEST(Oprss, SummedKeysMatchSingleHolder) {
    Rng rng = Rng::from_u64(3);
    uint16_t t = 4;
    auto three = make_holders(3, t, 1234);
    // single holder with the summed scalars
    oprf::OprfKeyShare combined;
    combined.holder_id = 1;
    combined.hash_key = three[0].hash_key + three[1].hash_key + three[2].hash_key;
    for (uint16_t m = 0; m + 1 < t; m++)
        combined.coef_keys.push_back(three[0].coef_keys[m] + three[1].coef_keys[m] +
                                     three[2].coef_keys[m]);
    std::vector<oprf::OprfKeyShare> one = {combined};

    Element s = *Element::parse_ip("198.51.100.23");
    for (uint32_t id : {1u, 2u, 3u}) {
        EXPECT_EQ(oprss::oprss_share(s, id, 2, 9, three, t, rng),
                  oprss::oprss_share(s, id, 2, 9, one, t, rng));
    }
    auto [bin3, ord3] = oprss::oprf_derived_hashes(s, 3, Pass::First, 9, three, 100, rng);
    auto [bin1, ord1] = oprss::oprf_derived_hashes(s, 3, Pass::First, 9, one, 100, rng);
    EXPECT_EQ(bin3, bin1);
    EXPECT_EQ(ord3, ord1);
}

TEST(Oprss, DerivedHashesDeterministicAcrossParticipants) {
    Rng rng_a = Rng::from_u64(4), rng_b = Rng::from_u64(999);
    auto holders = make_holders(2, 3, 55);
    Element s = *Element::parse_ip("203.0.113.9");
    auto [bin_a, ord_a] = oprss::oprf_derived_hashes(s, 5, Pass::First, 2, holders, 60, rng_a);
    auto [bin_b, ord_b] = oprss::oprf_derived_hashes(s, 5, Pass::First, 2, holders, 60, rng_b);
    EXPECT_EQ(bin_a, bin_b);  // blinding must not affect the outcome
    EXPECT_EQ(ord_a, ord_b);
    EXPECT_LT(bin_a, 60u);

    // pair sharing and per-pass bins, mirroring the keyed-hash rules
    auto [bin2, ord2] = oprss::oprf_derived_hashes(s, 6, Pass::First, 2, holders, 60, rng_a);
    EXPECT_EQ(ord2, ord_a);  // tables 5 and 6 share the ordering value
    auto [bin_second, ord_second] =
        oprss::oprf_derived_hashes(s, 5, Pass::Second, 2, holders, 60, rng_a);
    EXPECT_EQ(ord_second, ord_a);
    (void)bin2;
    (void)bin_second;
}

TEST(Oprss, BatchPathMatchesSingleElementPath) {
    auto params = make_params(3, 4, 4, 2);
    auto holders = make_holders(2, params.threshold, 321);
    Rng rng = Rng::from_u64(5);
    std::vector<Element> set = {*Element::parse_ip("10.1.0.1"), *Element::parse_ip("10.1.0.2"),
                                *Element::parse_ip("10.1.0.3")};

    auto batch = oprss::ClientBatch::create(set, params, rng);
    EXPECT_EQ(batch.coef_points.size(), oprss::coef_slot_count(set.size(), params));
    EXPECT_EQ(batch.hash_points.size(), oprss::hash_slot_count(set.size(), params));

    std::vector<std::vector<oprf::GroupElement>> coef_resps, hash_resps;
    for (const auto& h : holders) {
        coef_resps.push_back(oprss::evaluate_coef_batch(batch.coef_points, h));
        hash_resps.push_back(oprss::evaluate_hash_batch(batch.hash_points, h));
    }
    auto derived = oprss::finalize(set, params, batch, coef_resps, hash_resps);

    const uint32_t id = 2;
    oprss::OprssDerivations d(derived, params, id);
    for (uint32_t e = 0; e < set.size(); e++) {
        for (uint16_t a = 1; a <= params.table_count; a++) {
            EXPECT_EQ(d.share(a, e), oprss::oprss_share(set[e], id, a, params.round_id, holders,
                                                        params.threshold, rng));
            auto [bin, ord] = oprss::oprf_derived_hashes(set[e], a, Pass::First, params.round_id,
                                                         holders, params.bin_count(), rng);
            EXPECT_EQ(d.bin(a, Pass::First, e), bin);
            EXPECT_EQ(d.order_value(a, e), ord);
        }
    }
}

// key holders receive only valid group encodings, and the transcript
// shape is independent of the element values
TEST(Oprss, RequestsAreGroupElementsOnly) {
    auto params = make_params(3, 4, 4, 1);
    Rng rng = Rng::from_u64(6);
    std::vector<Element> set_a = {Element::from_u64(1), Element::from_u64(2),
                                  Element::from_u64(3), Element::from_u64(4)};
    std::vector<Element> set_b = {*Element::parse_ip("10.9.9.9"), *Element::parse_ip("10.9.9.8"),
                                  *Element::parse_ip("10.9.9.7"), *Element::parse_ip("10.9.9.6")};
    auto batch_a = oprss::ClientBatch::create(set_a, params, rng);
    auto batch_b = oprss::ClientBatch::create(set_b, params, rng);
    EXPECT_EQ(batch_a.coef_points.size(), batch_b.coef_points.size());
    EXPECT_EQ(batch_a.hash_points.size(), batch_b.hash_points.size());
    for (const auto& p : batch_a.coef_points) EXPECT_TRUE(p.is_valid());
    for (const auto& p : batch_a.hash_points) EXPECT_TRUE(p.is_valid());
}

TEST(Oprss, BatchSizeValidation) {
    auto holders = make_holders(1, 3, 1);
    std::vector<oprf::GroupElement> five(5);
    EXPECT_THROW(oprss::evaluate_coef_batch(five, holders[0]), ProtocolError);  // 5 % 2 != 0
}

}  // namespace
