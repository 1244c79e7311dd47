#include "semcom/synth_corpus.hpp"

#include <cctype>
#include <map>
#include <string_view>

#include "semcom/rng.hpp"

namespace semcom::corpus {

namespace {

using Grammar = std::map<std::string_view, std::vector<std::string_view>>;

const Grammar& grammar() {
  static const Grammar g = {
      {"sentence",
       {"{open}, I would like to thank the rapporteur for {poss} {quality} report on {topic}.",
        "{body} has {past} the {doc} on {topic} {when}.",
        "We must {act} {topic} in order to {goal}.",
        "I {vote} this report because {reason}.",
        "{body} cannot accept amendments {num} and {num} because they {flaw}.",
        "The vote will take place {votetime}.",
        "{open}, the situation concerning {topic} is {state} and {body} must {respond}.",
        "It is {judgement} that {body} {present} {topic} {when}.",
        "This is {weight} issue for {group} and for {group}.",
        "On behalf of {faction}, I would like to {stress} that we {stance} the {doc} on {topic}.",
        "{body} {present} {topic} because {group} {expect} {result}.",
        "The {doc} on {topic} is {judgement2} for {group}, but we {still}.",
        "{open}, {body} should {act} {topic} and {act} {topic} {when}.",
        "Our citizens {expect} {result} and they want {body} to {act} {topic}.",
        "The next item is the {doc} on {topic} {from} {body}.",
        "{open}, I would like to {stress} that {body} {present} {topic} and that we {still}.",
        "I would like to ask {body} whether it intends to {act} {topic} {when}, because {group} {expect} {result}.",
        "The {doc} on {topic} {from} {body} will be debated {votetime} together with the {doc} on {topic}."}},
      {"interjection",
       {"(Applause)", "Thank you.", "Very good.", "(Laughter)", "Agreed.", "The debate is closed.",
        "(The sitting was suspended)", "Is that agreed?"}},
      {"open",
       {"Mr President", "Madam President", "Ladies and gentlemen", "Commissioner",
        "Mr President, Commissioner", "Mr President, ladies and gentlemen"}},
      {"poss", {"his", "her", "their"}},
      {"quality", {"excellent", "balanced", "thorough", "detailed", "important", "very good"}},
      {"topic",
       {"the common agricultural policy", "the internal market", "climate change",
        "the protection of consumers", "the common fisheries policy", "energy security",
        "the single currency", "the enlargement of the union", "food safety", "the rights of workers",
        "public health", "the financial perspective", "the structural funds", "regional development",
        "the fight against terrorism", "the situation in the middle east", "human rights in china",
        "the stability and growth pact", "maritime safety", "the information society",
        "employment and social affairs", "the protection of the environment", "transport infrastructure",
        "research and innovation", "the budget for next year", "the asylum procedure",
        "the accession of turkey", "the lisbon strategy", "small and medium sized enterprises",
        "the protection of personal data", "the reform of the institutions", "development aid"}},
      {"body",
       {"the Commission", "the Council", "Parliament", "the Committee on Budgets",
        "the Committee on Legal Affairs", "the Presidency", "the Member States", "the Court of Auditors",
        "my group", "the European Central Bank"}},
      {"past", {"adopted", "rejected", "presented", "approved", "supported", "amended"}},
      {"present", {"supports", "welcomes", "has examined", "is reviewing", "will discuss", "opposes"}},
      {"doc",
       {"proposal", "report", "resolution", "directive", "regulation", "communication", "green paper",
        "action plan"}},
      {"when",
       {"this week", "last year", "in december", "at first reading", "without debate",
        "by a large majority", "yesterday", "in the coming months", "before the end of the year"}},
      {"act", {"ensure", "guarantee", "improve", "strengthen", "protect", "reform", "simplify", "support"}},
      {"goal",
       {"create more jobs", "protect our citizens", "meet the expectations of our citizens",
        "strengthen the confidence of consumers", "guarantee a sustainable future",
        "reduce the burden on business", "respect the principle of subsidiarity",
        "promote growth and competitiveness"}},
      {"vote", {"voted in favour of", "voted against", "abstained on", "supported"}},
      {"reason",
       {"it does not go far enough", "it respects the principle of subsidiarity",
        "it fails to address {topic}", "it strikes the right balance", "it will benefit {group}",
        "it ignores the needs of {group}", "it improves {topic}"}},
      {"num", {"1", "2", "3", "4", "5", "7", "8", "12", "15", "21", "33", "40"}},
      {"flaw",
       {"go beyond the scope of the report", "would weaken the compromise", "are not compatible with the treaty",
        "would increase the administrative burden", "have already been covered elsewhere"}},
      {"votetime",
       {"tomorrow at 12 noon", "today at 12 noon", "at the end of the debate", "on Thursday",
        "during the next part session", "tomorrow at 11 am"}},
      {"state", {"very serious", "still unclear", "deeply worrying", "improving", "unacceptable", "difficult"}},
      {"respond",
       {"take action immediately", "present a new proposal", "respond without delay",
        "listen to {group}", "act decisively"}},
      {"judgement", {"essential", "regrettable", "important", "clear", "unacceptable", "vital"}},
      {"judgement2", {"a step forward", "a good compromise", "a disappointment", "a clear signal"}},
      {"weight", {"an important", "a crucial", "a difficult", "a sensitive", "a very serious"}},
      {"group",
       {"farmers", "consumers", "workers", "our citizens", "small businesses", "young people", "the regions",
        "the candidate countries", "women", "fishermen"}},
      {"faction",
       {"my group", "the Group of the European People's Party", "the Socialist Group", "the Liberal Group",
        "the Greens", "the Confederal Group of the European United Left"}},
      {"stress", {"say", "stress", "point out", "emphasise", "make clear"}},
      {"stance", {"support", "oppose", "welcome", "regret", "cannot accept"}},
      {"expect", {"expect", "deserve", "demand", "are waiting for"}},
      {"result",
       {"clear rules", "concrete results", "more transparency", "real progress", "fair competition",
        "better protection"}},
      {"still",
       {"still have some concerns", "will vote in favour", "must go further", "need more time",
        "will table amendments"}},
      {"from", {"presented by", "on behalf of", "requested by", "submitted by"}},
  };
  return g;
}

std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

std::string expand(std::string_view tmpl, Rng& rng) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') {
      out.push_back(tmpl[i]);
      continue;
    }
    const auto close = tmpl.find('}', i);
    const auto name = tmpl.substr(i + 1, close - i - 1);
    const auto& options = grammar().at(name);
    out += expand(options[pick(rng, options.size())], rng);
    i = close;
  }
  return out;
}

}  // namespace

std::vector<std::string> synthesize_lines(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, hash_label("synth-corpus")));
  std::vector<std::string> lines;
  lines.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto roll = rng() % 100;
    std::string line;
    if (roll < 3) {
      line = expand("{interjection}", rng);
    } else if (roll < 6) {
      // run-on sentence, usually beyond the word limit
      auto first = expand("{sentence}", rng);
      first.pop_back();
      line = first + ", and " + expand("{sentence}", rng) + " " + expand("{sentence}", rng);
    } else {
      line = expand("{sentence}", rng);
    }
    line[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(line[0])));
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace semcom::corpus
