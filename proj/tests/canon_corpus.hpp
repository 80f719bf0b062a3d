#pragma once

#include <string_view>
#include <vector>

#include "mamr/core.hpp"

namespace testing {

struct CanonCase {
    mamr::Task task;
    std::string_view raw;
    std::string_view expected;
};

// Hand-worked expected forms.
inline const std::vector<CanonCase>& canon_corpus() {
    using mamr::Task;
    static const std::vector<CanonCase> cases = {
        {Task::folio, "The conclusion is True.", "true"},
        {Task::folio, "Unknown", "unknown"},
        {Task::folio, "", ""},
        {Task::folio, "   \n\t", ""},
        {Task::folio, "Therefore, the answer is False", "false"},
        {Task::folio, "It must be False", "false"},
        {Task::folio, "the statement is UNKNOWN!", "unknown"},
        {Task::folio, "True.", "true"},
        {Task::folio, "answer: (False)", "false"},
        {Task::folio, "False\n", "false"},
        {Task::folio, "It is true, so the answer is \"Unknown\".", "unknown"},

        {Task::raco, "The answer is 3 objects.", "3"},
        {Task::raco, "there are two such items", "2"},
        {Task::raco, "Blue, I believe.", "blue"},
        {Task::raco, "12", "12"},
        {Task::raco, "(C) 4", "4"},
        {Task::raco, "Twenty", "20"},
        {Task::raco, "zero", "0"},
        {Task::raco, "I count eleven items.", "11"},
        {Task::raco, "", ""},
        {Task::raco, "Magenta.", "magenta"},
        {Task::raco, "none of them", "none"},
        {Task::raco, "There are 15 or 16", "15"},
        {Task::raco, "the answer is: fourteen", "14"},

        {Task::tso, "Alice has the yellow ball.", "alice yellow"},
        {Task::tso, "the white present", "white"},
        {Task::tso, "purple", "purple"},
        {Task::tso, "At the end of the dance, Alice is dancing with Bob.", "alice bob"},
        {Task::tso, "Claire is playing goalkeeper.", "claire goalkeeper"},
        {Task::tso, "the theater ball", "theater"},
        {Task::tso, "The pink ball.", "pink"},
        {Task::tso, "", ""},
        {Task::tso, "Frankenstein", "frankenstein"},
        {Task::tso, "THE BLUE BALL", "blue"},
        {Task::tso, "the red ball has the red ball", "red red"},
    };
    return cases;
}

}  // namespace testing
