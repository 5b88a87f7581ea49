#pragma once

// Hand-built navigation models over a five-concept space for the credit example:
//
//   entry --> hard_inquiry --> credit_score
//         \-> delinquent_account
//   mortgage_application (reached from hard_inquiry only through a "what" unit)
//
// hard_inquiry's "what" section holds the example answer; HWN shows only why/how.

#include <string>
#include <vector>

#include "xspace/eval.hpp"

namespace xtest {

inline std::vector<xspace::QuizItem> mini_quiz() {
    using xspace::AnswerLocation;
    std::vector<xspace::QuizItem> q(3);
    q[0].question = "What did the Credit Approval System decide for Mary's application?";
    q[0].types = {"what", "how"};
    q[0].location.entry = true;
    q[1].question = "What is an example of hard inquiry?";
    q[1].types = {"what"};
    q[1].location.node = "hard_inquiry";
    q[1].location.archetype = "what";
    q[1].location.snippet = "mortgage application";
    q[1].location.open_qa = true;
    q[1].location.document = "heloc";
    q[2].question = "How does a credit score drop?";
    q[2].types = {"how"};
    q[2].location.node = "credit_score";
    q[2].location.archetype = "how";
    q[2].location.document = "scoring";
    for (auto& i : q) {
        i.choices = {"a", "b"};
        i.correct = "a";
    }
    return q;
}

inline xspace::NavModel mini_model(const std::string& profile) {
    xspace::NavModel m;
    m.profile = profile;
    m.documents = {"heloc", "scoring"};
    if (profile == "ose") {
        m.overviews = false;
        m.documents_on_entry = true;
        return m;
    }
    m.open_qa = profile == "yai4hu";
    m.entry_links = {"hard_inquiry", "delinquent_account"};
    m.moves["hard_inquiry"] = {"credit_score"};
    if (profile == "yai4hu") {
        m.moves["hard_inquiry"].insert("mortgage_application");
        m.sections["hard_inquiry"]["what"] = {"A mortgage application is an example of hard inquiry."};
    }
    m.sections["hard_inquiry"]["why"] = {"A hard inquiry lowers the credit score."};
    m.sections["credit_score"]["how"] = {"The credit score drops when payments are late."};
    m.qa_retrieves = [](const xspace::QuizItem& item) { return item.location.snippet.has_value(); };
    return m;
}

}  // namespace xtest
