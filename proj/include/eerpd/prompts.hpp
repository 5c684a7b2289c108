#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "eerpd/errors.hpp"
#include "eerpd/labels.hpp"
#include "eerpd/util.hpp"

// Prompt templates. The MBTI wording (including its typos, spacing, and
// trailing blanks, which are written as explicit " \n" literals) is frozen;
// the Big Five variants mirror the same structure with trait definitions
// swapped in. Do not "fix" the text: cached responses key on exact bytes.

namespace eerpd::prompts {

struct ExemplarSlot {
    std::string text;     // the exemplar author's text
    std::string result;   // canonical label string
    std::string process;  // generated reasoning; may be empty when CoT is ablated
};

namespace detail {

inline const std::string kMbtiDimensionLines =
    "Extroversion (E) or introversion (I) : indicates whether a person is more inclined to draw energy from the outside world or the inside world.\n"
    "Sense (S) or intuition (N) : indicates whether a person is more inclined to focus on concrete facts and details, or abstract concepts and possibilities.\n"
    "Thinking (T) or emotion (F) : indicates whether a person is more inclined to make decisions using logic and principles, or values and emotions.\n"
    "Judgment (J) or perception (P) : indicates whether a person is more inclined to a planned and organized lifestyle, or a flexible and random lifestyle.\n";

inline const std::string kBigFiveDimensionLines =
    "Agreeableness (AGR) : indicates whether a person is more inclined to be cooperative, compassionate, and trusting toward others.\n"
    "Conscientiousness (CON) : indicates whether a person is more inclined to be organized, disciplined, and dependable.\n"
    "Extraversion (EXT) : indicates whether a person is more inclined to draw energy from social interaction and the outside world.\n"
    "Neuroticism (NEU) : indicates whether a person is more inclined to experience negative emotions such as anxiety and mood swings.\n"
    "Openness (OPN) : indicates whether a person is more inclined to be curious, imaginative, and open to new experiences.\n";

inline const std::string kMbtiToolSentence =
    "MBTI is a tool used to assess a person's psychological preferences and personality types, "
    "and there are 16 different types of MBTI, each consisting of four letters representing four "
    "dimensions of preference. And the four dimensions are:\n";

inline const std::string kBigFiveToolSentence =
    "The Big Five is a tool used to assess a person's personality, and there are five trait "
    "dimensions, each labeled with one letter: y if the trait is present, or n if it is not. "
    "And the five dimensions are:\n";

// Shared Emotion / Emotion Regulation definitions as they appear in the
// prediction prompt (item 1 really has no space after "1.").
inline const std::string kEerDefinitions =
    "The definition of Emotion Regulation and Emotion are as follows: \n"
    "1.Emotion Sentences: These sentences should be clearly linked to immediate, temporary feelings that arise from specific, recent incidents or current situations. The key is that the emotion should be an obvious reaction to a recent event and not indicative of a deeper, long-standing trait or belief.\n"
    "2. Emotion Regulation Sentence: These sentences must consistently reflect the speaker's enduring traits. They should not be influenced by immediate circumstances but rather indicate a persistent and characteristic ability of controling emotion.\n";

inline std::string example_heading(std::size_t ordinal) {
    // The second heading's missing colon is part of the frozen template.
    if (ordinal == 2) return "Example 2\n";
    return "Example " + std::to_string(ordinal) + ":\n";
}

inline std::string count_word(std::size_t k) {
    if (k == 1) return "one";
    if (k == 2) return "two";
    return std::to_string(k);
}

inline const std::string kCotWorkedExample =
    "Here is an example:\n"
    "---\n"
    "Example:\n"
    "The posts of this user are:  'Wow, thank you for this thread! Physical vs. metaphysical is a great topic! I find that I am very much the same way your are. How can I put it....I have my days. :) The more I develop my xSxJ, the...|||my room. I like to be in my bad, next to my books, with my fan on and laptop nearby.|||I wouldn't say that I can read souls - but I can see potential. I can sense sadness, happiness, uneasiness, etc. I can tell when someone is not happy where they are and with what they are doing with...|||thank you for being so polite! :)|||I find eye contact is key. I acknowledge their existence and importance by maintaining eye contact with them throughout the conversation. Not by staring in their eyes in a creeper way, but by making...|||As an INFJ male I can somewhat relate to your post. A very close lady friend of mine and I were like this for years! I had always liked her and could read her fairly well. I knew when she needed...'\n"
    "\n"
    "Result: INFJ\n"
    "\n"
    "Process: Based on the posts you provided, I would guess that the user is an INFJ personality type. INFJs are known as the advocates, who are quiet and mystical, yet very inspiring and tireless idealists. They are often deeply spiritual, compassionate, and intuitive. They value harmony, authenticity, and personal growth. They can also be very sensitive, private, and perfectionistic.\n"
    "Some clues that suggest the user is an INFJ are:\n"
    "First of all, I think the user is an introvert (I). The user prefers to spend time alone in his room with books and laptop, rather than socializing with many people. He also seem to be more focused on his inner world of thoughts and feelings, rather than the outer world of events and actions.\n"
    "Secondly, I think the user is an intuitive (N). He is interested in abstract concepts and possibilities, such as physical vs. metaphysical. He can see the potential in people and situations, and he is not limited by the facts and details. He also has a wide range of knowledge and interests, and he is constantly learning and innovating.\n"
    "Thirdly, I think the user is a feeler (F). He makes decisions based on his values and emotions, rather than logic and principles. He can sense the emotions of others and empathize with them. He is polite and respectful, and he values harmony and cooperation.\n"
    "Lastly, I think the user is a judger (J). He prefers a planned and organized lifestyle, rather than a flexible and random one. He has a clear sense of direction and purpose, and he likes to achieve his goals. He also have a strong xSxJ side, which means he can use his sensing function to deal with reality and details when necessary.\n"
    "Therefore, based on my analysis, I think the user's MBTI type is INFJ. INFJs are known as the advocates or the counselors. They are idealistic, creative, compassionate, and insightful. They have a vision of how to make the world a better place, and they use their intuition and feeling to inspire and motivate others. They are also loyal, dedicated, and supportive of their friends and loved ones.\n"
    "---\n";

}  // namespace detail

/// Sentence-categorization prompt. Scheme-independent: the task is about
/// emotions, not the label set.
inline std::string categorization_prompt(std::string_view author_text) {
    if (trim(author_text).empty()) throw Error("categorization prompt needs non-empty text");
    std::string p =
        "I am a sentence sentiment adjudicator specialized in distinguishing the sources of emotions in sentences - whether they stem from the speaker's current mood or their inherent personality. Your task is to assist me by examining the text and discerning the dominant influence in each sentence, based on these highly refined definitions:\n"
        "\n"
        "1. Emotion Sentences: These sentences should be clearly linked to immediate, temporary feelings that arise from specific, recent incidents or current situations. The key is that the emotion should be an obvious reaction to a recent event and not indicative of a deeper, long-standing trait or belief.\n"
        "• Highly Refined Definition: Look for signs that the emotion is an immediate response to a particular event, is temporary, and doesn't reflect an ongoing pattern of thoughts or behaviors.\n"
        "• Examples and Analysis:\n"
        "  - \"Sex can be boring if it's in the same position often. For example me and my girlfriend are currently in an environment where we have to creatively use cowgirl and missionary. There isn't enough...\" - Emotion, as it describes a current, specific situation causing temporary boredom.\n"
        "  - \"I'm thrilled about the concert tonight!\" - Emotion, as the excitement is tied to a specific, imminent event (the concert).\n"
        "  - \"I am anxious because of the upcoming exam.\" - Emotion, since the anxiety is a temporary response to a specific future event (the exam).\n"
        "  - \"I am angry with my friend for something they did last week.\" - Emotion, because the anger is a reaction to a specific, recent event (the friend's action last week).\n"
        "\n"
        "2. Emotion Regulation Sentence: These sentences must consistently reflect the speaker's enduring traits. They should not be influenced by immediate circumstances but rather indicate a persistent and characteristic ability of controling emotion.\n"
        "• Highly Refined Definition: Determine if the expression is reflective of a longstanding personality trait for emotion control, consistent over time and not a reaction to a specific, recent circumstance.\n"
        "• Examples and Analysis:\n"
        "  - \"I'm finding the lack of me in these posts very alarming.\" - Emotion Regulation, as it reflects a long-term concern about self-representation rather than an immediate emotional reaction.\n"
        "  - \"Giving new meaning to 'Game' theory.\" - Emotion Regulation, as it expresses a general viewpoint on a concept, not about temporary feelings.\n"
        "  - \"Hello *ENTP Grin* That's all it takes. Than we converse and they do most of the flirting while I acknowledge their presence and return their words with smooth wordplay and more cheeky grins.\" - Emotion Regulation, as it describes a consistent behavior pattern rather than a reaction to a specific event.\n"
        "  - \"Real IQ test I score 127. Internet IQ tests are funny. I score 140s or higher. Now, like the former responses of this thread I will mention that I don't believe in the IQ test. Before you banish...\" - Emotion Regulation, as it reflects a long-standing skepticism towards IQ tests, not an immediate emotional reaction.\n"
        "\n"
        "Special Case: Any sentences containing only a URL should be classified as 'Emotion Regulation'.\n"
        "  - \"http://www.youtube.com/watch?v=4V2uYORhQOk\" - Emotion Regulation, because it is a pure URL.\n"
        "  - \"http://playeressence.com/wp-content/uploads/2013/08/RED-red-the-pokemon-master-32560474-450-338.jpg\" - Emotion Regulation, as it is a URL.\n"
        "\n"
        "Ambiguous Examples and Detailed Analysis:\n"
        "1. \"The last thing my INFJ friend posted on his facebook before committing suicide the next day. Rest in peace~\" - Emotion. Although it mentions an INFJ personality type, the focus is on the immediate emotional reaction to the friend's recent suicide.\n"
        "2. \"I often find myself reflecting deeply on my experiences.\" - Emotion Regulation. This indicates a consistent trait of introspection, not linked to a specific, recent event.\n"
        "\n"
        "For each sentence provided, carefully determine whether it primarily reflects 'Emoiton' or 'Emotion Regulation', based on these highly refined criteria. List each sentence and categorize it as either 'Emotion' or 'Emotion Regulation'.\n"
        "\n"
        "The texts from this author are: ";
    p += author_text;
    p +=
        ".\n"
        "\n"
        "Respond in the following format without any reason or explain:\n"
        "0.  [Emotion/Emotion Regulation]\n"
        "1.  [Emotion/Emotion Regulation]\n"
        "2.  [Emotion/Emotion Regulation]\n"
        "\n"
        "Focus meticulously on these criteria to maximize the accuracy and consistency of classification.\n";
    return p;
}

/// Prompt that asks for an exemplar's reasoning chain, given its gold label.
inline std::string cot_prompt(Scheme scheme, std::string_view label_string,
                              std::string_view author_text) {
    if (trim(author_text).empty()) throw Error("reasoning prompt needs non-empty text");
    std::string p = "Suppose you are a psychologist with a keen interest in personality types and online behavior. You know that ";
    if (scheme == Scheme::MBTI) {
        p += detail::kMbtiToolSentence;
        p += "\n";
        p += detail::kMbtiDimensionLines;
        p += "\n";
        p += "I will give you 45~50 posts from the same user, divided by |||. Please use MBTI personality analysis to help me analyze what the user's MBTI is most likely to be. I will give you 45~50 posts from the same user, divided by |||, and the MBTI type of the user. Please use MBTI personality analysis to help me analyze why the user is this MBTI type. \n";
        p += detail::kCotWorkedExample;
        p += "Now, you should generate the {Process}, according to the MBTI type and the posts given to you.\n";
        p += "The user's MBTI type is: ";
        p += label_string;
        p += ", and the user's posts are:";
        p += author_text;
        p += ".\n";
    } else {
        // Mirrors the MBTI structure; no worked example exists for essays, so
        // that block is omitted rather than fabricated.
        p += detail::kBigFiveToolSentence;
        p += "\n";
        p += detail::kBigFiveDimensionLines;
        p += "\n";
        p += "I will give you an essay from the user. Please use Big Five personality analysis to help me analyze what the user's Big Five traits are most likely to be. I will give you an essay from the user, and the Big Five traits of the user. Please use Big Five personality analysis to help me analyze why the user has these Big Five traits. \n";
        p += "Now, you should generate the {Process}, according to the Big Five traits and the essay given to you.\n";
        p += "The user's Big Five traits are: ";
        p += label_string;
        p += ", and the user's essay is:";
        p += author_text;
        p += ".\n";
    }
    p += "Your response should follow the following format: \n";
    p += "Process: {your reasoning process}.\n";
    return p;
}

/// Few-shot prediction prompt: preamble, channel definitions, k exemplars
/// (with their reasoning unless `include_cot` is off), then the target text.
inline std::string prediction_prompt(Scheme scheme, const std::vector<ExemplarSlot>& exemplars,
                                     std::string_view target_text, std::size_t expected_k,
                                     bool include_cot = true) {
    if (exemplars.size() != expected_k)
        throw Error("prediction prompt needs exactly " + std::to_string(expected_k) +
                    " exemplars, got " + std::to_string(exemplars.size()));
    if (exemplars.empty()) throw Error("prediction prompt needs at least one exemplar");
    if (trim(target_text).empty()) throw Error("prediction prompt needs non-empty target text");

    const bool mbti = scheme == Scheme::MBTI;
    std::string p;
    if (mbti) {
        p += detail::kMbtiToolSentence;
        p += detail::kMbtiDimensionLines;
        p += "You are an AI assistant who specializes at MBTI personality traits. I will give you texts from the same author, and then I will ask you the author's MBTI type, and then you need to give me your choice. \n";
    } else {
        p += detail::kBigFiveToolSentence;
        p += detail::kBigFiveDimensionLines;
        p += "You are an AI assistant who specializes at Big Five personality traits. I will give you texts from the same author, and then I will ask you the author's Big Five traits, and then you need to give me your choice. \n";
    }
    p += "\n";
    p += detail::kEerDefinitions;
    p += "\n";
    p += "Please refer to the following examples to learn how to use Emotion Regulation and Emotion in the text for personality classification.\n";
    p += "\n";
    if (mbti) {
        p += "I will give you 45~50 posts from the same user, divided by |||. Please use MBTI personality analysis to help me analyze what the user's MBTI is most likely to be. \n";
    } else {
        p += "I will give you an essay from the user. Please use Big Five personality analysis to help me analyze what the user's Big Five traits are most likely to be. \n";
    }
    p += "Here are " + detail::count_word(exemplars.size()) + " examples:\n";
    p += "---\n";
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
        p += detail::example_heading(i + 1);
        p += mbti ? "The posts of this user are: " : "The text of this user is: ";
        p += exemplars[i].text;
        p += "\n";
        p += "Result: ";
        p += exemplars[i].result;
        p += "\n";
        if (include_cot) {
            p += "Process:";
            p += exemplars[i].process;
            p += "\n";
        }
        p += "---\n";
    }
    if (mbti) {
        p += "Now, analysis the user's MBTI type with your reasoning process.\n";
        p += "It should be noted that when the user's first dimension result is E, the user's fourth dimension result is more likely to be P.\n";
        p += "The user's post reads as follows: \n";
    } else {
        p += "Now, analysis the user's Big Five traits with your reasoning process.\n";
        p += "The user's text reads as follows: \n";
    }
    p += target_text;
    p += "\n";
    p += "Your response should follow the following format: \n";
    if (mbti) {
        p += "Result: {The four letters represent the type of mbti you guessed}\n";
    } else {
        p += "Result: {Five letters, one of y or n per trait, in the order AGR, CON, EXT, NEU, OPN}\n";
    }
    p += "Process: {your reasoning process}.\n";
    return p;
}

// Appended to the original prompt for the single repair round after a
// malformed response; the longer prompt also gives the retry a fresh cache key.

inline std::string categorization_retry_suffix() {
    return "\n\nYour previous response could not be parsed. Respond again with exactly one line "
           "per sentence, numbered from 0 with no gaps, in the format:\n"
           "0. [Emotion/Emotion Regulation]\n"
           "Do not add any other text.";
}

inline std::string prediction_retry_suffix(Scheme scheme) {
    std::string hint = scheme == Scheme::MBTI
                           ? "the four MBTI letters"
                           : "five letters, y or n per trait, in the order AGR, CON, EXT, NEU, OPN";
    return "\n\nYour previous response could not be parsed. Respond again in exactly this "
           "format:\nResult: {" + hint + "}\nProcess: {your reasoning process}.";
}

inline std::string cot_retry_suffix() {
    return "\n\nYour previous response could not be parsed. Respond again beginning with "
           "'Process: ' followed by your reasoning.";
}

}  // namespace eerpd::prompts
