#include "ractdas/singulation.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "ractdas/error.hpp"

namespace ractdas {

namespace {

void require_distinct(std::vector<TagId> tags) {
    std::sort(tags.begin(), tags.end());
    if (std::adjacent_find(tags.begin(), tags.end()) != tags.end()) {
        fail(ErrorCode::InvalidTagId, "tag field contains duplicate IDs");
    }
}

// Tags answering a probe: every tag whose top `length` bits equal `prefix`.
std::vector<TagId> responders(const std::vector<TagId>& field, std::uint64_t prefix, int length) {
    std::vector<TagId> out;
    for (const TagId& t : field) {
        const std::uint64_t top = length == 0 ? 0 : t.value() >> (TagId::kBits - length);
        if (top == prefix) out.push_back(t);
    }
    return out;
}

void probe(const std::vector<TagId>& field, std::uint64_t prefix, int length, TreeResult& out) {
    ++out.query_count;
    const std::vector<TagId> answering = responders(field, prefix, length);
    if (answering.empty()) return;
    if (answering.size() == 1) {
        out.discovered.push_back(answering.front());
        return;
    }
    // Distinct 40-bit IDs cannot collide on a full-length prefix.
    probe(answering, prefix << 1, length + 1, out);
    probe(answering, (prefix << 1) | 1U, length + 1, out);
}

}  // namespace

int slot_occupancy(const SlotOutcome& s) noexcept {
    if (std::holds_alternative<slot::Single>(s)) return 1;
    if (const auto* c = std::get_if<slot::Collision>(&s)) return c->count;
    return 0;
}

int AlohaRoundLog::successes() const noexcept {
    return static_cast<int>(std::count_if(slots.begin(), slots.end(), [](const SlotOutcome& s) {
        return std::holds_alternative<slot::Single>(s);
    }));
}

int AlohaRoundLog::collisions() const noexcept {
    return static_cast<int>(std::count_if(slots.begin(), slots.end(), [](const SlotOutcome& s) {
        return std::holds_alternative<slot::Collision>(s);
    }));
}

int AlohaRoundLog::empties() const noexcept {
    return static_cast<int>(slots.size()) - successes() - collisions();
}

AlohaResult aloha_singulate(const TagField& field, const AlohaParams& params) {
    if (params.frame_size < 1 || params.max_rounds < 1) {
        throw std::invalid_argument("frame_size and max_rounds must be positive");
    }
    require_distinct(field.tags);

    std::mt19937_64 rng(field.rng_seed);
    std::uniform_int_distribution<int> pick(0, params.frame_size - 1);

    std::vector<TagId> unread = field.tags;
    std::sort(unread.begin(), unread.end());

    AlohaResult result;
    for (int round = 1; round <= params.max_rounds && !unread.empty(); ++round) {
        std::vector<std::vector<TagId>> slots(static_cast<std::size_t>(params.frame_size));
        for (const TagId& t : unread) slots[static_cast<std::size_t>(pick(rng))].push_back(t);

        AlohaRoundLog log;
        log.round = round;
        log.unread_at_start = static_cast<int>(unread.size());
        std::vector<TagId> still_unread;
        for (const auto& occupants : slots) {
            if (occupants.empty()) {
                log.slots.emplace_back(slot::Empty{});
            } else if (occupants.size() == 1) {
                log.slots.emplace_back(slot::Single{occupants.front()});
                result.read.insert(occupants.front());
            } else {
                log.slots.emplace_back(slot::Collision{static_cast<int>(occupants.size())});
                still_unread.insert(still_unread.end(), occupants.begin(), occupants.end());
            }
        }
        std::sort(still_unread.begin(), still_unread.end());
        unread = std::move(still_unread);
        log.reads_completed = result.read;
        result.rounds.push_back(std::move(log));
    }
    return result;
}

TreeResult tree_singulate(const TagField& field) {
    require_distinct(field.tags);
    TreeResult result;
    probe(field.tags, 0, 0, result);
    return result;
}

}  // namespace ractdas
