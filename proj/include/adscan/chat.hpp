#pragma once

// Parser for the subset of the CHAT transcription format used by
// picture-description interviews: speaker tiers, `xxx`, `<...> [/]`
// retracing, `(.)` pauses, `&uh`-style fillers and the `+...` trailing-off
// terminator. Everything else is stripped and noted on the transcript.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adscan::chat {

struct RawChatDocument {
  std::vector<std::string> lines;
  std::string source_id;

  /// Splits on '\n' (a trailing '\r' is dropped from each line).
  static RawChatDocument from_text(std::string_view text, std::string source_id);
};

enum class EventKind { Unintelligible, Retracing, Pause, Filler, TrailingOff };
inline constexpr std::array<EventKind, 5> kEventKinds = {
    EventKind::Unintelligible, EventKind::Retracing, EventKind::Pause, EventKind::Filler,
    EventKind::TrailingOff};

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept;

// `begin`/`end` index into the utterance's (kept) tokens; most events are
// zero-width and mark where the removed material sat. `consumed` is the
// number of content words the event removed from the token list.
struct ParsedEvent {
  EventKind kind;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t consumed = 0;

  friend bool operator==(const ParsedEvent&, const ParsedEvent&) = default;
};

enum class Role { Participant, Interviewer };

struct Utterance {
  std::string speaker;
  Role role = Role::Participant;
  std::vector<std::string> tokens;
  std::vector<ParsedEvent> events;
  std::size_t line = 0;  // 1-based source line of the speaker tier

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

enum class Gender { Male, Female };
enum class Label { Control, Dementia, Unknown };

std::string_view to_string(Gender g) noexcept;
std::string_view to_string(Label l) noexcept;
std::optional<Gender> gender_from_string(std::string_view s) noexcept;
std::optional<Label> label_from_string(std::string_view s) noexcept;

struct Demographics {
  std::optional<double> age;
  std::optional<Gender> gender;

  friend bool operator==(const Demographics&, const Demographics&) = default;
};

struct Transcript {
  std::string id;
  std::vector<Utterance> utterances;
  Demographics demographics;
  double audio_length_seconds = 0.0;  // 0 until metadata is attached
  Label label = Label::Unknown;
  std::vector<std::string> stripped;  // control codes removed as noise

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

struct ParseOptions {
  std::vector<std::string> interviewer_codes = {"INV"};
};

/// Throws Error{MalformedLine} (message carries source id and line number)
/// or Error{EmptyDocument}.
Transcript parse_chat(const RawChatDocument& doc, const ParseOptions& options = {});

/// Cleaning rules applied to a token list: `\-`, `\/`, `-`, `/` become
/// spaces, `. : ? ; , ! "` are deleted, curly apostrophes are normalized and
/// everything is lowercased. Empty results are dropped.
std::vector<std::string> clean_tokens(std::span<const std::string> tokens);

/// Cleaned participant tokens of the whole transcript, in utterance order.
std::vector<std::string> clean_text(const Transcript& t);

/// Cleaned participant utterances; utterances that clean to nothing are skipped.
std::vector<std::vector<std::string>> clean_utterances(const Transcript& t);

struct EventCounts {
  std::array<std::size_t, kEventKinds.size()> counts{};

  std::size_t operator[](EventKind k) const noexcept { return counts[static_cast<std::size_t>(k)]; }
  std::size_t& operator[](EventKind k) noexcept { return counts[static_cast<std::size_t>(k)]; }
  friend bool operator==(const EventCounts&, const EventCounts&) = default;
};

/// Participant utterances only.
EventCounts event_counts(const Transcript& t);

std::size_t participant_utterance_count(const Transcript& t);
std::size_t interviewer_utterance_count(const Transcript& t);

/// Per-transcript metadata record, as stored in the sidecar JSON.
struct SidecarRecord {
  std::string id;
  std::optional<double> age;
  std::optional<Gender> gender;
  double audio_length_seconds = 0.0;
  Label label = Label::Unknown;
};

/// Overwrites demographics/audio length/label with the record's values.
/// Throws Error{InvalidMetadata} for a non-positive audio length or an age
/// outside [0, 130].
void apply_sidecar(Transcript& t, const SidecarRecord& record);

}  // namespace adscan::chat
