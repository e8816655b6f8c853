#pragma once

#include <json.hpp>

#include "adscan/chat.hpp"

namespace adscan::chat {

void to_json(nlohmann::json& j, const ParsedEvent& e);
void from_json(const nlohmann::json& j, ParsedEvent& e);
void to_json(nlohmann::json& j, const Utterance& u);
void from_json(const nlohmann::json& j, Utterance& u);
void to_json(nlohmann::json& j, const Transcript& t);
void from_json(const nlohmann::json& j, Transcript& t);
void to_json(nlohmann::json& j, const SidecarRecord& r);
void from_json(const nlohmann::json& j, SidecarRecord& r);

}  // namespace adscan::chat
