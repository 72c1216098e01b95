#pragma once

#include <map>
#include <string>
#include <string_view>

namespace tracecot {

// Replaces each "{name}" whose name is a key of `slots`, scanning the template
// once; substituted text is never rescanned. Unknown braces are kept as-is.
std::string fill_slots(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& slots);

}  // namespace tracecot
