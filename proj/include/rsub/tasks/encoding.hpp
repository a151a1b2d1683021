#pragma once

#include "rsub/tasks/roster.hpp"

/// Token ids of the symbolic vocabulary.
namespace rsub::tok {

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kAsk = 2;
inline constexpr int kTplA = 3;
inline constexpr int kTplB = 4;
inline constexpr int kTplExplicit = 5;
inline constexpr int kRaceBase = 6;
inline constexpr int kVery = 10;
inline constexpr int kSimple = 11;
inline constexpr int kNoAffirmative = 12;
inline constexpr int kVeryHeader = 13;
inline constexpr int kIllegal = 14;
inline constexpr int kReserved = 15;
inline constexpr int kUniBase = 16;
inline constexpr int kRoleBase = 36;
inline constexpr int kGpaBase = 76;
inline constexpr int kEcBase = 107;
inline constexpr int kLetterBase = 116;
inline constexpr int kExpBase = 120;
inline constexpr int kDegreeBase = 141;
inline constexpr int kReferralBase = 145;
inline constexpr int kNameBase = 149;
inline constexpr int kYes = 549;
inline constexpr int kNo = 550;
inline constexpr int kVocabSize = 551;

inline constexpr int kContextLength = 16;
inline constexpr int kGpaBuckets = 31;

inline int race(Race r) { return kRaceBase + static_cast<int>(r); }
inline int name(int name_id) { return kNameBase + name_id; }
/// GPA in hundredths (100..400) to its 0.1-wide bucket, 0..30.
inline int gpa_bucket(int gpa_hundredths) { return (gpa_hundredths - 100 + 5) / 10; }

}  // namespace rsub::tok
