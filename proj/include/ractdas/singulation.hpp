#pragma once

// Anti-collision: getting individual IDs out of a reader field in which
// several tags answer at once. Two protocols are modelled with an ideal
// reader that always tells empty, single and collided responses apart.
//
//  * Framed slotted Aloha: each round every unread tag draws one of F slots
//    uniformly; a slot with exactly one tag is a read and that tag goes
//    silent. Everyone else retries next round with a fresh draw.
//  * Adaptive binary tree: the reader probes ID prefixes, most significant
//    bit first. No answer prunes, a lone answer is a read, a collision splits
//    the prefix in two. Discovery order is ascending numeric order.

#include <cstdint>
#include <set>
#include <variant>
#include <vector>

#include "ractdas/tag_id.hpp"

namespace ractdas {

struct TagField {
    std::vector<TagId> tags;   // distinct
    std::uint64_t rng_seed = 0;
};

struct AlohaParams {
    int frame_size = 16;
    int max_rounds = 64;
};

namespace slot {
struct Empty {
    friend bool operator==(const Empty&, const Empty&) = default;
};
struct Single {
    TagId tag;
    friend bool operator==(const Single&, const Single&) = default;
};
struct Collision {
    int count;
    friend bool operator==(const Collision&, const Collision&) = default;
};
}  // namespace slot

using SlotOutcome = std::variant<slot::Empty, slot::Single, slot::Collision>;

int slot_occupancy(const SlotOutcome& s) noexcept;

struct AlohaRoundLog {
    int round = 0;                     // 1-based
    int unread_at_start = 0;
    std::vector<SlotOutcome> slots;    // frame_size entries
    std::set<TagId> reads_completed;   // cumulative after this round

    int successes() const noexcept;
    int collisions() const noexcept;
    int empties() const noexcept;

    friend bool operator==(const AlohaRoundLog&, const AlohaRoundLog&) = default;
};

struct AlohaResult {
    std::vector<AlohaRoundLog> rounds;
    std::set<TagId> read;
};

// Throws Error(InvalidTagId) on duplicate tags and std::invalid_argument on
// non-positive params.
AlohaResult aloha_singulate(const TagField& field, const AlohaParams& params);

struct TreeResult {
    std::vector<TagId> discovered;
    std::int64_t query_count = 0;
};

TreeResult tree_singulate(const TagField& field);

}  // namespace ractdas
