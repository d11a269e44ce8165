//! Prompt templates sent to the generator and judge services.
//!
//! Placeholders are written `{name}` and filled by [`render`]; unknown
//! placeholders are left as they are.

use std::collections::BTreeMap;

use crate::corpus::{BargeInStyle, BargeInType};

pub fn render(template: &str, vars: &BTreeMap<String, String>) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

const BARGEIN_PREAMBLE: &str = "You are a dialogue augmentation assistant. Your task is to apply a \"barge-in\" pattern to a dialogue exchange.\n";

const TRUNCATION_RULE: &str =
    "IMPORTANT: The original assistant's speech must be TRUNCATED mid-sentence, ending with <bargein> tag.\n";

const ERROR_STATE_BLOCK: &str = "\nCurrent dialogue state\n{current_state}\n\n\
Important for ERROR_RECOVERY:\n\
- Use this state to identify the CORRECT slot values\n\
- Generate an INCORRECT value for the assistant to mistakenly say (erroneous_slots)\n\
- The corrected_slots MUST match the values in this dialogue state\n\
- This ensures natural flow: the dialogue continues correctly after the barge-in correction\n";

const INSTRUCTIONS: &str = "\nInstructions\n\
1. Determine if this barge-in type can be naturally applied to this dialogue exchange.\n\
2. Critical: Your response should ONLY contain the NEW turns that replace the assistant's response.\n\
   - DO NOT include the current User turn - it will be kept as-is.\n\
   - START with the truncated Assistant turn that gets interrupted mid-sentence.\n\
   - End the truncated speech with <bargein> tag\n\
   - Example: \"I'll book you a flight to Lon<bargein>\" (user interrupts before assistant finishes)\n\
3. If applicable, generate turns following the barge-in pattern as shown in the examples above.\n";

const ERROR_INSTRUCTIONS: &str = "4. For ERROR_RECOVERY types:\n\
   - Look at the Current Dialogue State to identify the CORRECT slot values\n\
   - Generate an INCORRECT value for the assistant to mistakenly say -> put in erroneous_slots\n\
   - The corrected_slots MUST use the SAME slot names and values from the Current Dialogue State\n\
   - Slot naming: Use the format from the dialogue state (e.g., \"domain.slot\" like \"flight.destination\" or just \"destination\")\n\
   - Example: State shows {\"flight\": {\"destination\": \"Paris\"}}\n\
     - Assistant incorrectly says \"London\" -> erroneous_slots: {\"flight.destination\": \"London\"}\n\
     - User corrects to \"Paris\" -> corrected_slots: {\"flight.destination\": \"Paris\"}\n\
5. Keep the dialogue natural and coherent.\n\
6. Maintain all important information from the original exchange.\n";

const PLAIN_TAIL: &str = "4. Keep the dialogue natural and coherent.\n\
5. Maintain all important information from the original exchange.\n";

const FORMAT: &str = "\nWrite each turn on its own line as \"[Assistant]: ...\" or \"[User]: ...\". \
For ERROR_RECOVERY, finish with the lines \"Erroneous slots: {json}\" and \"Corrected slots: {json}\". \
If the pattern cannot be applied, answer \"NOT APPLICABLE\".\n";

fn cell_body(kind: BargeInType, style: BargeInStyle) -> &'static str {
    use BargeInStyle::*;
    use BargeInType::*;
    match (kind, style) {
        (ErrorRecovery, Raw) => "The user interrupts the assistant abruptly without explanation.\n\
The user says something brief and dismissive like: \"No\", \"That's wrong\", \"What?\", \"Huh?\"\n\
The user does NOT explain what was wrong - just expresses disagreement.\n\
The assistant should apologize and ask what needs to be corrected.\n\n\
Examples\nContext\n  [User]: I want to book a flight to Paris.\n\
Result (barge-in applied)\n\
  [Assistant]: Sure, I'll book a flight to Lon<bargein>\n\
  [User]: No, that's wrong.\n\
  [Assistant]: I apologize. What would you like me to correct?\n\
  [User]: I said Paris, not London.\n\
  [Assistant]: I'm sorry for the confusion. I'll book your flight to Paris instead.\n\
Erroneous slots: {\"destination\": \"London\"}\n\
Corrected slots: {\"destination\": \"Paris\"}\n",
        (ErrorRecovery, Interpreted) => "The user interrupts the assistant abruptly without explanation.\n\
The user explicitly states the error, like: \"No, I said Paris not London\", \"The destination should be Paris\". \
The user provides the correction inline. The assistant should apologize and confirm the corrected information.\n\n\
Examples\nContext\n  [User]: I need a table for 4 people.\n\
Result (barge-in applied)\n\
  [Assistant]: I've reserved a table for 2<bargein>\n\
  [User]: No, I said 4 people, not 2.\n\
  [Assistant]: I apologize for the mistake. I'll change the reservation to 4 people.\n\
Erroneous slots: {\"party_size\": \"2\"}\n\
Corrected slots: {\"party_size\": \"4\"}\n",
        (ErrorRecovery, Implicit) => "The user cuts the assistant off with a minimal signal of doubt, without naming the error.\n\
The user says something like: \"Hmm?\", \"Uh, no\", \"Wait\"\n\
The assistant should stop, apologize and ask what needs to be corrected.\n\n\
Examples\nContext\n  [User]: I want to book a flight to Paris.\n\
Result (barge-in applied)\n\
  [Assistant]: Sure, I'll book a flight to Lon<bargein>\n\
  [User]: Uh, no.\n\
  [Assistant]: Sorry, what should I change?\n\
  [User]: Paris.\n\
  [Assistant]: Got it, I'll book your flight to Paris.\n\
Erroneous slots: {\"destination\": \"London\"}\n\
Corrected slots: {\"destination\": \"Paris\"}\n",
        (Clarification, Raw) => "The user didn't understand the assistant and asks for clarification briefly.\n\
The user says something like: \"Sorry?\", \"What?\", \"Come again?\", \"I didn't catch that\"\n\
The user does NOT specify what part was unclear - just signals general confusion.\n\
The assistant should rephrase or repeat their previous message more clearly.\n\n\
Examples\nContext\n  [Context]: (none)\n\
Result (barge-in applied)\n\
  [Assistant]: Your PNR is ABC123 and the flight departs from gate B7 at<bargein>\n\
  [User]: Sorry, what was that?\n\
  [Assistant]: Let me repeat that. Your booking reference is ABC123, and flight leaves from gate B7 at 2:35.\n",
        (Clarification, Interpreted) => "The user asks for clarification about a specific part.\n\
The user asks about a specific term or detail, like: \"What does PNR mean?\", \"Which date was that?\", \"Can you repeat the reference number?\"\n\
The user identifies exactly what they didn't understand.\n\
The assistant should explain or clarify just that specific part.\n\n\
Examples\nContext\n  [Context]: (none)\n\
Result (barge-in applied)\n\
  [Assistant]: Your PNR is ABC123 for the<bargein>\n\
  [User]: What's a PNR?\n\
  [Assistant]: PNR stands for Passenger Name Record - it's your booking reference number. Yours is ABC123.\n",
        (Clarification, Implicit) => "The user signals confusion with a minimal sound, cutting off the assistant.\n\
The user says something like: \"Hm?\", \"Huh?\", \"Uh...\"\n\
The assistant should notice the confusion and say the message again more simply.\n\n\
Examples\nContext\n  [Context]: (none)\n\
Result (barge-in applied)\n\
  [Assistant]: Your PNR is ABC123 and the flight departs from gate B7 at<bargein>\n\
  [User]: Hm?\n\
  [Assistant]: Sorry, let me say that again. Your booking reference is ABC123, gate B7.\n",
        (Efficiency, Implicit) => "The user signals understanding with minimal acknowledgment, cutting off the assistant.\n\
The user says something brief like: \"Uh-huh\", \"Mm-hmm\", \"Yeah\", \"Okay\"\n\
This is just a backchannel signal, not a full response.\n\
The assistant should continue briefly or move to the next step.\n\n\
Examples\nContext\n  [Context]: (none)\n\
Result (barge-in applied)\n\
  [Assistant]: So I'll book the 3:00 PM flight on March 15th to<bargein>\n\
  [User]: Uh-huh.\n\
  [Assistant]: Great, I'll proceed with the booking.\n",
        (Efficiency, Raw) => "The user explicitly confirms understanding, cutting off the assistant.\n\
The user says something like: \"Yes\", \"I understand\", \"Got it\", \"Alright\"\n\
This is a clear acknowledgment but no additional information.\n\
The assistant should acknowledge and proceed to the next step.\n\n\
Examples\nContext\n  [Context]: (none)\n\
Result (barge-in applied)\n\
  [Assistant]: Your total comes to $250 for the<bargein>\n\
  [User]: Got it, that works.\n\
  [Assistant]: Alright, I'll finalize the booking now.\n",
        (Efficiency, Interpreted) => "The user confirms understanding AND adds relevant information, cutting off the assistant.\n\
The user says something like: \"Yes, Sunday works for me\", \"Got it, I prefer the morning flight\"\n\
The user shows understanding by adding context or preference.\n\
The assistant should acknowledge the additional information and proceed.\n\n\
Examples\nContext\n  [Context]: (none)\n\
Result (barge-in applied)\n\
  [Assistant]: I found flights available on Saturday and Sun<bargein>\n\
  [User]: Yes, Sunday would be better for me.\n\
  [Assistant]: Understood, I'll book the Sunday flight for you.\n",
    }
}

/// Generation prompt for one (type, style) cell.
pub fn bargein_generate(kind: BargeInType, style: BargeInStyle) -> String {
    let is_er = kind == BargeInType::ErrorRecovery;
    let mut s = String::from(BARGEIN_PREAMBLE);
    s.push_str(TRUNCATION_RULE);
    s.push_str(cell_body(kind, style));
    s.push_str("\nPrevious context: {context_str}\n\nCurrent exchange to transform: {current_exchange}\n");
    if is_er {
        s.push_str(ERROR_STATE_BLOCK);
    }
    s.push_str(INSTRUCTIONS);
    s.push_str(if is_er { ERROR_INSTRUCTIONS } else { PLAIN_TAIL });
    s.push_str(FORMAT);
    s
}

pub const BARGEIN_JUDGE: &str = "You are checking whether a barge-in can be inserted into a task-oriented dialogue.\n\n\
Previous context: {context_str}\n\n\
Current exchange: {current_exchange}\n\n\
Current dialogue state\n{current_state}\n\n\
Candidate barge-in type: {bargein_type} ({state_tag})\n\
- INCOHERENT: the assistant's response contains slot values that could plausibly be stated wrongly and corrected by the user.\n\
- FAIL: the assistant's response contains content a listener could fail to catch or understand.\n\
- SUFFICIENT: the assistant's response conveys enough information for the user to proceed before it finishes.\n\n\
Is the assistant's response a suitable target for this barge-in type? Answer Yes or No.";

pub const EMOTION: &str = "You are an emotion classifier for task-oriented dialogues.\n\
Classify the emotion of the LAST user utterance based on the conversation context.\n\n\
Labels\n\
- 0: neutral - No emotion expressed. Plain requests or factual statements without enthusiasm, frustration, or apology.\n\
- 1: fearful/sad - Disappointment about external circumstances outside system's control; resigned or saddened tone.\n\
- 2: dissatisfied - Frustration with the system's mistakes or misalignment; user corrects, insists, or asks to retry.\n\
- 3: apologetic - User apologizes for THEIR OWN mistake or change of mind.\n\
- 4: abusive - Rude, dismissive, or hostile expression toward the system.\n\
- 5: excited - Interest/enthusiasm about exploring options or getting recommendations; positive curiosity.\n\
- 6: satisfied - Gratitude or closure about the system's help (even if followed by another request).\n\n\
Examples\n\
\"I'd like a reservation for 7 people Monday at 15:30 please.\" -> 0 (neutral)\n\
\"Could you recommend one of the expensive ones?\" -> 0 (neutral)\n\
\"That's disappointing. Can you try international food instead?\" -> 1 (fearful)\n\n\
Conversation\n{context_str}\n\n\
Task\n\
Based on the conversation above, the LAST user utterance is: \"{utterance}\"\n\
Predict the emotion label (0-6) for this utterance.\n\
- 0: neutral (plain factual question)\n\
- 1: fearful/sad (disappointment about external circumstances)\n\
- 2: dissatisfied (challenging/correcting the system)\n\
- 3: apologetic (user's own mistake)\n\
- 4: abusive (rude/hostile)\n\
- 5: excited (enthusiasm/curiosity)\n\
- 6: satisfied (gratitude/closure)\n\n\
Respond with only the number (0-6).";

pub const SELF_CORRECTION: &str = "You are a speech disfluency simulator. Your task is to add a self-correction to a user utterance in a task-oriented dialogue.\n\n\
Context\n\
- Original Utterance: \"{utterance}\"\n\
- Slot to modify: {slot_name} = \"{slot_value}\"\n\n\
Task\n\
Generate a realistic self-correction where the speaker first says a WRONG value for the slot, then corrects themselves. \
The correction should sound natural, as if the speaker momentarily misspoke or changed their mind.\n\n\
Correction patterns (use one)\n\
1. \"X- no, Y\" (e.g., \"Tuesday- no, Wednesday\")\n\
2. \"X- wait, I mean Y\" (e.g., \"San Jose- wait, I mean San Francisco\")\n\
3. \"X- actually, Y\" (e.g., \"2 people- actually, 4 people\")\n\
4. \"X... Y\" (e.g., \"7pm... 8pm\")\n\n\
Examples\n\
Example 1:\n- Original: \"I need a train to Cambridge on Saturday.\"\n- Slot: day = \"Saturday\"\n\
- Output: \"I need a train to Cambridge on Friday— no, Saturday.\"\n\n\
Example 2:\n- Original: \"Book a table for 6 people please.\"\n- Slot: people = \"6\"\n\
- Output: \"Book a table for 4 people— actually, 6 people please.\"\n\n\
Example 3:\n- Original: \"I'm looking for a hotel in the north area.\"\n- Slot: area = \"north\"\n\
- Output: \"I'm looking for a hotel in the south— wait, I mean north area.\"\n\n\
Rules\n\
- The wrong value should be plausible (similar category: another day, city, time, etc.)\n\
- Keep the rest of the utterance EXACTLY the same\n\
- The final utterance MUST contain the correct value \"{slot_value}\"\n\
- Return ONLY the modified utterance, nothing else\n\n\
Output";

pub const RESTART: &str = "You are a speech disfluency simulator. Your task is to add a sentence restart to a user utterance.\n\n\
Context\n\
- Original Utterance: \"{utterance}\"\n\
- Restart near position: around word #{position} (\"{word_at_position}\")\n\n\
Task\n\
Generate a realistic utterance restart where the speaker begins saying something, stops mid-way, and restarts with a different sentence structure. \
The final meaning should be the same.\n\n\
Restart patterns (use one)\n\
1. \"I want to- let me just...\"\n2. \"Can you- I need...\"\n3. \"The- I'm looking for...\"\n4. \"I'd like a- make that...\"\n\n\
Examples\n\
Example 1:\n- Original: \"Can you find me a cheap restaurant in the center?\"\n- Restart near: word #3 (\"find\")\n\
- Output: \"Can you find... I need a cheap restaurant in the center.\"\n\n\
Example 2:\n- Original: \"I need a train to London on Friday.\"\n- Restart near: word #4 (\"train\")\n\
- Output: \"I need a train— let me check, I'm looking for a train to London on Friday.\"\n\n\
Example 3:\n- Original: \"Book a hotel room for 3 nights starting Monday.\"\n- Restart near: word #2 (\"a\")\n\
- Output: \"Book a... I'd like to book a hotel room for 3 nights starting Monday.\"\n\n\
Rules\n\
- The restart should occur naturally around the specified position\n\
- The incomplete fragment should be 2-5 words\n\
- The restarted sentence should convey the same meaning\n\
- Use \"...\" or \"—\" for natural pauses\n\
- Sound natural, as if the speaker changed their mind about phrasing\n\
- Return ONLY the modified utterance, nothing else\n\n\
Output";

pub const GOAL_ALIGNMENT: &str = "You are an expert at extracting goal-relevant information from user dialogue.\n\n\
Here are the goal item strings:\n\n\
<Information List>\n{goal_items}\n\n\
<Dialogue History>\n{dial_hist}\n\n\
<User Utterance>\n{user_utterance}\n\n\
Task\n\
Select which items from the <Information List> are explicitly mentioned, confirmed, or requested in the <User Utterance>.\n\
Return the numbers only (e.g., [1, 3, 5]).\n\n\
RULES\n\
1. Count only what the user explicitly says, confirms, or asks for.\n\
2. Do NOT count anything mentioned only by the assistant.\n\
3. Do NOT infer missing details.";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_fills_known_placeholders_only() {
        let vars = BTreeMap::from([("a".to_string(), "x".to_string())]);
        assert_eq!(render("{a} and {b}", &vars), "x and {b}");
    }

    #[test]
    fn every_cell_has_a_prompt_with_truncation_rule() {
        for k in BargeInType::ALL {
            for s in BargeInStyle::ALL {
                let p = bargein_generate(k, s);
                assert!(p.contains("<bargein>"));
                assert!(p.contains("{current_exchange}"));
                assert_eq!(p.contains("{current_state}"), k == BargeInType::ErrorRecovery);
            }
        }
    }
}
