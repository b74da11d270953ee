#include "otpsi/table.hpp"

#include <gtest/gtest.h>

#include <set>

#include "otpsi/share_gen.hpp"
#include "test_util.hpp"

using namespace otpsi;

namespace {

std::vector<Element> random_set(Rng& rng, size_t n) {
    std::set<Element> s;
    while (s.size() < n) s.insert(test::random_ipv4(rng));
    return {s.begin(), s.end()};
}

SessionParams make_params(uint32_t n, uint16_t t, uint64_t m, uint16_t tables) {
    SessionParams p;
    p.n_participants = n;
    p.threshold = t;
    p.max_set_size = m;
    p.table_count = tables;
    p.round_id = 77;
    return p;
}

TEST(Survivors, SingletonAlwaysSurvives) {
    KeyedHash kh((ParticipantKey{}));
    std::vector<Element> set = {Element::from_u64(9)};
    auto out = select_survivors(set, 1, Pass::First, kh, 5, 40);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out.begin()->second, set[0]);
    EXPECT_EQ(out.begin()->first, kh.derive_bin(1, set[0], 5, Pass::First, 40));
}

TEST(Survivors, SmallerOrderingValueWinsOnOddTables) {
    KeyedHash kh((ParticipantKey{}));
    Rng rng = Rng::from_u64(5);
    // find two elements colliding in a bin of a small table
    const uint32_t bins = 4;
    for (int found = 0; found < 20;) {
        Element a = test::random_ipv4(rng), b = test::random_ipv4(rng);
        if (a == b) continue;
        if (kh.derive_bin(1, a, 1, Pass::First, bins) != kh.derive_bin(1, b, 1, Pass::First, bins))
            continue;
        found++;
        std::vector<Element> set = {a, b};
        auto out = select_survivors(set, 1, Pass::First, kh, 1, bins);
        const Element& winner =
            kh.derive_order(1, a, 1) <= kh.derive_order(1, b, 1) ? a : b;
        ASSERT_EQ(out.at(kh.derive_bin(1, a, 1, Pass::First, bins)), winner);
    }
}

// survivor per bin equals a brute-force scan over all colliders
TEST(Survivors, MatchesBruteForceScan) {
    KeyedHash kh((ParticipantKey{}));
    Rng rng = Rng::from_u64(6);
    const uint32_t bins = 800;
    const uint64_t round = 3;
    auto set = random_set(rng, 200);
    for (uint16_t table : {uint16_t(1), uint16_t(2)}) {
        for (Pass pass : {Pass::First, Pass::Second}) {
            bool asc = ascending_order(table, pass);
            std::map<uint32_t, Element> expect;
            for (const Element& e : set) {
                uint32_t b = uint32_t(kh.derive_bin(table, e, round, pass, bins));
                auto it = expect.find(b);
                if (it == expect.end()) {
                    expect.emplace(b, e);
                    continue;
                }
                uint64_t oe = kh.derive_order(table, e, round);
                uint64_t ow = kh.derive_order(table, it->second, round);
                bool better = oe != ow ? (asc ? oe < ow : oe > ow)
                                       : (asc ? e < it->second : it->second < e);
                if (better) it->second = e;
            }
            EXPECT_EQ(select_survivors(set, table, pass, kh, round, bins), expect);
        }
    }
}

TEST(Survivors, SecondPassExcludesOccupiedBins) {
    KeyedHash kh((ParticipantKey{}));
    Rng rng = Rng::from_u64(61);
    auto set = random_set(rng, 120);
    const uint32_t bins = 60;  // over-full so both passes see collisions
    std::vector<uint32_t> cands(set.size());
    for (uint32_t i = 0; i < set.size(); i++) cands[i] = i;

    BuildOptions opt;
    auto placement = detail::place_sub_table(
        bins, uint32_t(set.size()), 1,
        [&](uint16_t tb, Pass p, uint32_t i) { return kh.derive_bin(tb, set[i], 9, p, bins); },
        [&](uint16_t tb, uint32_t i) { return kh.derive_order(tb, set[i], 9); },
        [&](uint32_t a, uint32_t b) { return set[a] < set[b]; }, opt);

    std::set<int32_t> first_winners;
    for (uint32_t b = 0; b < bins; b++) {
        if (placement.first[b] >= 0) first_winners.insert(placement.first[b]);
        if (placement.second[b] >= 0) {
            EXPECT_LT(placement.first[b], 0);  // never evicts a first-pass occupant
        }
    }
    for (uint32_t b = 0; b < bins; b++)
        if (placement.second[b] >= 0)
            EXPECT_FALSE(first_winners.count(placement.second[b]));  // <= 1 cell per sub-table
}

TEST(TableBuilder, EmptySetIsAllDummies) {
    auto params = make_params(3, 2, 10, 4);
    KeyedHash kh((ParticipantKey{}));
    std::vector<Element> empty;
    KeyedDerivations derive(kh, empty, params, 1);
    Rng rng = Rng::from_u64(1);
    auto [table, slots] = build_share_table(empty, params, derive, rng);
    EXPECT_TRUE(slots.elements.empty());
    EXPECT_EQ(table.cells.size(), size_t(4) * 20);
    for (size_t i = 0; i < table.cells.size(); i++) {
        EXPECT_LT(table.cells[i], Fe::kModulus);
        EXPECT_TRUE(table.occupancy[i]);
    }
}

TEST(TableBuilder, SingleElementOccupiesOneCellPerSubTable) {
    auto params = make_params(3, 3, 5, 7);
    KeyedHash kh((ParticipantKey{}));
    std::vector<Element> set = {Element::from_u64(77)};
    KeyedDerivations derive(kh, set, params, 2);
    Rng rng = Rng::from_u64(2);
    auto [table, slots] = build_share_table(set, params, derive, rng);
    ASSERT_EQ(slots.elements.size(), 1u);
    ASSERT_EQ(slots.cells[0].size(), params.table_count);
    for (uint16_t a = 1; a <= params.table_count; a++) {
        EXPECT_EQ(slots.cells[0][a - 1].table, a);
        // first pass, unblocked
        EXPECT_EQ(slots.cells[0][a - 1].bin,
                  kh.derive_bin(a, set[0], params.round_id, Pass::First, params.bin_count()));
    }
}

TEST(TableBuilder, SlotMapReplayReproducesNonDummyCells) {
    auto params = make_params(4, 3, 60, 6);
    KeyedHash kh((ParticipantKey{}));
    Rng rng = Rng::from_u64(10);
    auto set = random_set(rng, 60);
    KeyedDerivations derive(kh, set, params, 3);
    Rng fill = Rng::from_u64(3);
    auto [table, slots] = build_share_table(set, params, derive, fill, {.threads = 2});

    size_t occupied = 0;
    for (uint8_t o : table.occupancy) occupied += o;  // occupancy all true after fill
    EXPECT_EQ(occupied, table.cells.size());

    size_t replayed = 0;
    for (size_t e = 0; e < slots.elements.size(); e++) {
        for (Cell c : slots.cells[e]) {
            Fe expect = share_noninteractive(kh, c.table, slots.elements[e], params.round_id, 3,
                                             params.threshold);
            ASSERT_EQ(table.cell(c.table, c.bin), expect.value());
            replayed++;
        }
    }
    EXPECT_GT(replayed, 0u);
}

// two participants holding a shared element agree on its placement in
// every sub-table where neither is blocked by its own colliders
TEST(TableBuilder, CrossParticipantAgreement) {
    auto params = make_params(2, 2, 80, 8);
    ParticipantKey key;
    Rng krng = Rng::from_u64(1000);
    krng.fill(key.bytes);
    KeyedHash kh(key);
    Rng rng = Rng::from_u64(20);

    for (int rep = 0; rep < 10; rep++) {
        auto set_a = random_set(rng, 70);
        auto set_b = random_set(rng, 70);
        Element shared = test::random_ipv4(rng);
        set_a.push_back(shared);
        set_b.push_back(shared);

        KeyedDerivations da(kh, set_a, params, 1), db(kh, set_b, params, 2);
        Rng ra = Rng::from_u64(21), rb = Rng::from_u64(22);
        auto [ta, sa] = build_share_table(set_a, params, da, ra);
        auto [tb, sb] = build_share_table(set_b, params, db, rb);

        auto cells_of = [&](const SlotIndexMap& m) {
            for (size_t i = 0; i < m.elements.size(); i++)
                if (m.elements[i] == shared) return m.cells[i];
            return std::vector<Cell>{};
        };
        auto ca = cells_of(sa), cb = cells_of(sb);
        // same (table, bin) wherever both placed it
        for (Cell x : ca)
            for (Cell y : cb)
                if (x.table == y.table) EXPECT_EQ(x.bin, y.bin);
    }
}

TEST(TableBuilder, RejectsOversizedSet) {
    auto params = make_params(3, 2, 4, 2);
    KeyedHash kh((ParticipantKey{}));
    Rng rng = Rng::from_u64(30);
    auto set = random_set(rng, 5);
    KeyedDerivations derive(kh, set, params, 1);
    EXPECT_THROW(build_share_table(set, params, derive, rng), SetTooLarge);
}

TEST(TableBuilder, FixedSeedReproducesBytes) {
    auto params = make_params(3, 2, 30, 4);
    KeyedHash kh((ParticipantKey{}));
    Rng rng = Rng::from_u64(40);
    auto set = random_set(rng, 25);
    KeyedDerivations d1(kh, set, params, 1), d2(kh, set, params, 1);
    Rng f1 = Rng::from_u64(9), f2 = Rng::from_u64(9);
    auto [t1, s1] = build_share_table(set, params, d1, f1, {.threads = 1});
    auto [t2, s2] = build_share_table(set, params, d2, f2, {.threads = 2});
    EXPECT_EQ(t1.serialize(), t2.serialize());  // thread count must not matter
}

TEST(TableBuilder, FillDummiesLeavesOccupiedCells) {
    ShareTable t(2, 5);
    t.cells[3] = 123;
    t.occupancy[3] = 1;
    Rng rng = Rng::from_u64(50);
    fill_dummies(t, rng);
    EXPECT_EQ(t.cells[3], 123u);
    for (size_t i = 0; i < t.cells.size(); i++) {
        EXPECT_LT(t.cells[i], Fe::kModulus);
        EXPECT_TRUE(t.occupancy[i]);
    }
}

TEST(TableBuilder, SerializationRoundTrip) {
    ShareTable t(3, 7);
    Rng rng = Rng::from_u64(60);
    fill_dummies(t, rng);
    Bytes wire = t.serialize();
    EXPECT_EQ(wire.size(), 6u + 3u * 7u * 8u);
    ShareTable back = ShareTable::deserialize(wire);
    EXPECT_EQ(back.n_tables, 3);
    EXPECT_EQ(back.n_bins, 7u);
    EXPECT_EQ(back.cells, t.cells);

    wire[6] = 0xff;  // cell 0 -> non-canonical
    wire[7] = 0xff;
    wire[8] = 0xff;
    wire[9] = 0xff;
    wire[10] = 0xff;
    wire[11] = 0xff;
    wire[12] = 0xff;
    wire[13] = 0xff;
    EXPECT_THROW(ShareTable::deserialize(wire), Error);
    EXPECT_THROW(ShareTable::deserialize(std::span<const uint8_t>(wire.data(), 10)), Error);
}

}  // namespace
