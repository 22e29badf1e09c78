#include "isg/prompts.hpp"

namespace isg::prompts {

namespace {

constexpr std::string_view kStructureExamples = R"EX(
Example 1:
Prompt: <query_text1> Generate four images showing how to make a paper boat. After each image, write one sentence explaining the step.
Output:
{"Thought": "Four images, each followed by one explanatory text block.",
 "Query": ["<query_text1>"],
 "Answer": ["<gen_img1>", "<gen_text1>", "<gen_img2>", "<gen_text2>", "<gen_img3>", "<gen_text3>", "<gen_img4>", "<gen_text4>"]}

Example 2:
Prompt: <query_img1> <query_text1> Describe the whole picture first, then show each of the two main objects as a separate image followed by its caption.
Output:
{"Thought": "One overall description, then two image-caption pairs.",
 "Query": ["<query_img1>", "<query_text1>"],
 "Answer": ["<gen_text1>", "<gen_img1>", "<gen_text2>", "<gen_img2>", "<gen_text3>"]}
)EX";

constexpr std::string_view kBlockExtractionExamples = R"EX(
Example:
Prompt: <query_img1> <query_text1> Transform this photo into three paintings in the styles of Van Gogh, Monet and Picasso. Before each painting, write a short description of the style.
Element sequence: Query: ["<query_img1>", "<query_text1>"]; Answer: ["<gen_text1>", "<gen_img1>", "<gen_text2>", "<gen_img2>", "<gen_text3>", "<gen_img3>"]
Output:
{"Thought": "Each text describes the style of the following image; each image keeps the content of the input photo.",
 "relation": [
  ["<gen_text1>", "<gen_img1>", "describes the painting style of"],
  ["<gen_img1>", "<query_img1>", "keeps the content of"],
  ["<gen_text2>", "<gen_img2>", "describes the painting style of"],
  ["<gen_img2>", "<query_img1>", "keeps the content of"],
  ["<gen_text3>", "<gen_img3>", "describes the painting style of"],
  ["<gen_img3>", "<query_img1>", "keeps the content of"]]}
)EX";

constexpr std::string_view kImageExtractionExamples = R"EX(
Example:
Prompt: <query_text1> Generate an image of a yellow fish swimming in clear water, then write a caption for it.
Element sequence: Query: ["<query_text1>"]; Answer: ["<gen_img1>", "<gen_text1>"]
Output:
{"tuple": [
  ["entity", "fish", "<gen_img1>"],
  ["entity", "water", "<gen_img1>"],
  ["attribute", "yellow", "fish", "<gen_img1>"],
  ["attribute", "clear", "water", "<gen_img1>"],
  ["relation", "swim in", "fish", "water", "<gen_img1>"]]}
)EX";

constexpr std::string_view kBlockQuestionExamples = R"EX(
Example input:
[["<gen_text1>", "<gen_img1>", "describes the painting style of"], ["<gen_img1>", "<query_img1>", "keeps the content of"]]
Example output:
[{"subject": "<gen_text1>", "object": "<gen_img1>", "relation": "describes the painting style of",
  "Question": "Does <gen_text1> describe the painting style of this image?"},
 {"subject": "<gen_img1>", "object": "<query_img1>", "relation": "keeps the content of",
  "Question": "Does the first image keep the content of the second image?"}]
)EX";

constexpr std::string_view kImageQuestionExamples = R"EX(
Example input:
[["entity", "fish", "<gen_img1>"], ["attribute", "yellow", "fish", "<gen_img1>"], ["entity", "water", "<gen_img1>"], ["relation", "swim in", "fish", "water", "<gen_img1>"]]
Example output:
[{"image": "<gen_img1>", "Question": "Is there a fish in this image?", "id": 0, "Preliminary": []},
 {"image": "<gen_img1>", "Question": "Is the fish yellow?", "id": 1, "Preliminary": [0]},
 {"image": "<gen_img1>", "Question": "Is there water in this image?", "id": 2, "Preliminary": []},
 {"image": "<gen_img1>", "Question": "Is the fish swimming in the water?", "id": 3, "Preliminary": [0, 2]}]
)EX";

std::string judge_requirement(JudgeScale scale) {
    if (scale == JudgeScale::Score1To10) {
        return "Judge Requirement: You should output a score on a scale of 1-10 and your reason. "
               "The score should be a numerical value that reflects how well the question is "
               "answered by the given text and image. 10 means the question is answered "
               "perfectly. 1 means the question is not answered at all.\n\n";
    }
    return "Judge Requirement: You should output \"Yes\" or \"No\" and your reason. Answer "
           "\"Yes\" only if the question is answered affirmatively by the given input.\n\n";
}

constexpr std::string_view kJudgeOutput =
    "Output Requirement:\nPlease output in JSON format, directly output your judgment in key "
    "\"Judge\" and your reason in key \"Reason\". Do not write an introduction or summary. Do not "
    "output other irrelevant information.\n";

}  // namespace

std::string structure_extraction() {
    std::string p = R"P(Task: Extract key information from a multimodal prompt and format it into JSON.

Input: A prompt for a multimodal model to generate interleaved text-and-image content. The prompt may include input images.

Output: JSON format containing the following keys:
1. "Query": List representing the sequence of images and text in the input
2. "Answer": List representing the sequence of images and text in the expected output

Special Tokens:
- Input query:
  - Images: <query_img1>, <query_img2>, ...
  - Text: <query_text1>, <query_text2>, ...
- Generated output:
  - Images: <gen_img1>, <gen_img2>, ...
  - Text: <gen_text1>, <gen_text2>, ...

Here are examples:)P";
    p += kStructureExamples;
    p += R"P(
Instructions:
1. Analyze the given prompt to determine the number of images and text pieces to be generated.
2. Identify the sequence of images and text in both the query and the expected answer.
3. Format the extracted information into the specified JSON structure.
4. There will not be adjacent <gen_text>, such as <gen_textX> <gen_textX+1>.
5. Only output the sequence of images and text noted by <gen_text> and <gen_img> in the "Answer", and by <query_text> and <query_img> in the "Query".
6. Think before you output your final answer, you can format your thought in a key "Thought" in your output and explain your answer to be generated.
)P";
    return p;
}

std::string block_requirements_extraction() {
    std::string p = R"P(Task: Extract and format the relationships between elements in a multimodal prompt and its expected generated answer.

Input:
1. Original prompt for a multimodal model
2. Sequence of elements represented by special tokens

Output: JSON format with a "relation" key containing a list of triplets.

Relation Triplet Format: (<subject>, <object>, <relation>)
- <relation> is an open-vocabulary description (phrase or short sentence)
- The triplet should be able to form a fluent English sentence: <subject> <relation> <object>
- Avoid duplicate triplets
- Only include relations explicitly described in the prompt
- The order of <subject> and <object> should reflect the most logical and fluent relationship, regardless of their sequence in the input or output

Instructions:
1. Analyze the given prompt carefully.
2. Identify explicit relationships between elements in both the prompt and expected answer.
3. Format relationships as triplets according to the specified format.
4. Ensure the triplets can be easily constructed into fluent English sentences.
5. Use specific descriptors for relations, forming phrases or short sentences.
6. Ensure all triplets are unique and explicitly described in the prompt.
7. Order <subject> and <object> in each triplet to create the most logical and fluent relationship. Do not include relations between input images and texts.
8. Compile the triplets into a list under the "relation" key in the JSON output.
9. Think before you output your final answer, you can format your thought in a key "Thought" in your output and explain your answer to be generated.

Here are examples:)P";
    p += kBlockExtractionExamples;
    p += R"P(
Note: Only include relations that can be confidently inferred from the prompt. The triplets must form fluent English sentences when read as "<subject> <relation> <object>". Do not include obscure or ambiguous relations that cannot be understood by reading the triplet alone; for example, prefer "is an image of the object extracted from" over "is an image of the third object extracted from".
)P";
    return p;
}

std::string image_requirements_extraction(std::string_view requirement) {
    std::string p = R"P(Task: Predict atomic concrete visual entities, attributes, and relations for generated images based on a prompt for a multimodal generative model.

Input:
1. Original prompt for a multimodal generative model
2. Sequence of elements represented by special tokens

Output:
JSON format with a "tuple" key containing a list of tuples in the following formats:
1. Entity: (entity, name of entity, image_id), for example: ["entity", "fish", "<gen_img1>"]
2. Attribute: (attribute, name of attribute, entity, image_id), for example: ["attribute", "yellow", "fish", "<gen_img1>"]
3. Relation: (relation, name of relation, entity1, entity2, image_id), for example: ["relation", "swim in", "fish", "water", "<gen_img1>"]

Here are examples:)P";
    p += kImageExtractionExamples;
    p += R"P(
Instructions:
1. Carefully analyze the given prompt, focusing on predicting concrete, visual elements that are highly likely to appear in the generated images. Do not describe or analyze any input images mentioned in the prompt.
2. If the prompt includes descriptions or captions of multiple input images, identify common themes and key visual elements across these descriptions. Use these commonalities to inform your predictions for the generated images.
3. Predict tangible entities first. These should be physical objects or beings that can be visually represented in generated images. Avoid abstract concepts or general scenes like 'scene', 'atmosphere', or 'landscape'.
4. For each predicted entity, identify its likely visual attributes. Focus on characteristics that would be visibly apparent in a generated image.
5. Atomize entities and attributes as much as possible, and generate entity tuples first, then attribute tuples, and finally relation tuples. For example, do not output "yellow fish" as an entity; output "fish" as an entity and "yellow" as an attribute.
6. For attributes and relations, always reference the specific entity or entities they are associated with.
7. Specify which generated image (image_id) each predicted element is expected to appear in. If an entity is likely to appear in multiple generated images, create separate tuples for each image. Do not include tuples that cannot be inferred from the prompt.
8. Only include tuples for elements you are highly confident will appear in the generated images based on the prompt and common sense reasoning.
9. For prompts describing a sequence of generated images, consider how visual elements might change or interact across the sequence.
10. Compile the tuples into a list under the "tuple" key in the JSON output.
)P";
    p += "\nAccurate image generation is required for: ";
    p += requirement;
    p += ".\n";
    return p;
}

std::string block_question_generation() {
    std::string p = R"P(Task: Create questions for each provided triplet to verify the stated relationship.

Input: A list of triplets in the format (<subject>, <object>, <relation>).

Output: A JSON list of objects, each containing the original triplet information and a generated question.

Here are examples:)P";
    p += kBlockQuestionExamples;
    p += R"P(
Instructions:
1. For each input triplet, create an object with the following structure:
   {
     "subject": "<subject from triplet>",
     "object": "<object from triplet>",
     "relation": "relation from triplet",
     "Question": "<generated question>"
   }
2. Generate a question that, when answered, would verify whether the stated relationship between the subject and object is correct.
3. Ensure the question is clear, concise, and directly related to the triplet's content.
4. Replace image references (e.g., <gen_img1>, <query_img1>) with "this image" if only one image occurs in the triplet, otherwise replace with "first image", "second image" for the subject and object based on their order of appearance in the triplet.
5. Do not use "third" or "fourth" images in the question, as the maximum number of images in a question is 2 (subject and object).
6. Keep text references (e.g., <gen_text1>, <query_text1>) as they are in the original triplet.
7. Frame the question in a way that can be answered with a yes/no or true/false response.
8. Compile all generated objects into a JSON list.
)P";
    return p;
}

std::string image_question_generation() {
    std::string p = R"P(Task: Create questions for each provided triplet of entity, attribute, or relation, and format them into a specific JSON structure.

Input: A list of triplets in the following formats:
1. Entity: (entity, name of entity, image_id)
2. Attribute: (attribute, name of attribute, entity, image_id)
3. Relation: (relation, name of relation, entity1, entity2, image_id)

Output: A JSON list of objects, each containing the generated question and related information.

Here are examples:)P";
    p += kImageQuestionExamples;
    p += R"P(
Instructions:
1. For each input triplet, in input order, create an object with the following structure:
     "image": special token referring to the generated image,
     "Question": "<generated question>",
     "id": <numeric id starting from 0>,
     "Preliminary": [<list of prerequisite question ids>]
2. Generate a question that verifies the existence of the entity, the presence of the attribute, or the relationship between entities.
3. Ensure the question is clear, concise, and can be answered with a yes/no response.
4. Assign a unique numeric id to each question, starting from 0.
5. Determine any prerequisite questions and list their ids in the "Preliminary" field.
   - For attributes, include the id of the corresponding entity question.
   - For relations, include the ids of both entity questions.
6. Compile all generated objects into a JSON list.
)P";
    return p;
}

std::string block_vqa_two_texts(JudgeScale scale) {
    std::string p = "Task: You are given two texts and a question. Please judge whether the question "
                    "is correct within the two texts.\n\n";
    p += judge_requirement(scale);
    p += kJudgeOutput;
    return p;
}

std::string block_vqa_multimodal(JudgeScale scale) {
    std::string p =
        "Task: You are given a question about interleaved content consisting of one or two images "
        "and possibly a text. Images are attached in the order they are referred to: the first "
        "attached image is the \"first image\" and the second attached image is the \"second "
        "image\"; a single attached image is \"this image\". Please judge whether the question is "
        "correct given the provided content.\n\n";
    p += judge_requirement(scale);
    p += kJudgeOutput;
    return p;
}

std::string image_vqa() {
    return R"P(Task: You are a helpful assistant capable of analyzing images and answering questions about them. Your task is to examine the provided image and answer the given question.

Input:
- An image
- A question about the image (e.g., "Is a dog in this image?" or "Is the dog blue in this image?")

Output:
Provide your response in JSON format with the following structure:
{
  "Judge": "Yes" or "No",
  "Reason": "Your explanation here"
}

Instructions:
1. Analyze the provided image.
2. Consider the question asked about the image.
3. Determine whether the answer to the question is "Yes" or "No".
4. Provide a brief but clear explanation for your judgment.
5. Format your response in the required JSON structure.
)P";
}

std::string holistic_judge(bool with_golden) {
    std::string p = "Task: You are a helpful and impartial assistant. You are given a multimodal "
                    "query with one or several images and a multimodal answer with interleaved "
                    "text and images.";
    if (with_golden) p += " I will also provide a golden answer to the query.";
    p += " Please judge whether the answer is correct and relevant to the query in several "
         "dimensions.\n\n";
    p += R"P(Judge Requirement: Evaluate the answer based on the following dimensions:
1. Coherence: How well the text and images work together to convey a unified message or story.
2. Content Accuracy: The factual correctness of both textual information and visual elements.
3. Relevance and Responsiveness: How well the generated content addresses the given query.
4. Visual-Textual Alignment: The degree to which generated images match and support the accompanying text.
5. Creativity and Originality: The model's ability to generate novel and imaginative content across both text and images.

Output Requirement: Please output in JSON format, including scores for each dimension (on a scale of 1-10) and a final overall score (on a scale of 1-10). Also provide brief explanations for each score. Analyze first, then judge: write your analysis in key "Analysis" before any score. Use exactly these keys:
{"Analysis": "...",
 "Coherence": {"Score": <1-10>, "Explanation": "..."},
 "Content Accuracy": {"Score": <1-10>, "Explanation": "..."},
 "Relevance and Responsiveness": {"Score": <1-10>, "Explanation": "..."},
 "Visual-Textual Alignment": {"Score": <1-10>, "Explanation": "..."},
 "Creativity and Originality": {"Score": <1-10>, "Explanation": "..."},
 "Overall Score": <1-10>}
)P";
    return p;
}

std::string agent_planning() {
    return R"P(Task:
You are a proficient planning agent tasked with writing a step-by-step plan for a `tool agent` based on a multimodal input. Generate a strictly JSON-formatted plan, ensuring each step leads the tool agent towards a coherent final result.

Key Instructions:
- Step Format: Each Step contains a "Task" Category (Only three labels Call_tool, Caption and AddImage), "Input_text" and "Input_images" fields and "Output" field. AddImage step only contains "Task" and "Input_images" fields.
- Control Tool Usage: All the "Call_tool" steps will be executed at the beginning in order, creating an orderly generated image list [<GEN_0>, <GEN_1>,...], this Task does not affect the final output and the structure because all the generated images will be added to the output in AddImage steps.
- Control Result Format: Design the relationship between Caption steps and AddImage steps to fit the structural requirement. A Caption step adds a text part to the final result, indicating a <gen_text{ID}> placeholder in the structure, while an AddImage step adds an image fragment to the final result, indicating a <gen_img{ID}> placeholder in the structure. Design the order of Caption and AddImage steps to fit the required structure. Do not plan several continuous "Caption" steps, which will be merged into one text fragment in the end.
- Tool Guidance: Each Call_tool step's text instruction should guide the tool agent on which tool to utilize. Use clear terms like "Generate one image", "Edit the image", "Generate a continuous video", "Generate 3D views", "Morphing from" as needed. Look at the Tool Box for more details.

Tool Box:
- ImageGeneration: Generates one image based on descriptive text only. No references allowed. ImageGeneration is expert in text-guided image generation, but it cannot see any input image.
- ImageEdit: Edits an input image based on a provided prompt and the image. Proficient at editing images like style transfer, attribute modification, and handling subtle changes. When the task requires a change in the input image, use this tool.
- VideoGeneration: Creates a sequence of images from input text and one input image for guidance, returning several image screenshots of a continuous event. You have to mention how many images you want from this tool. VideoGeneration is expert in frame-contiguous and short-time-contiguous generation. Cannot Coexist with other tool in one plan and can only be used once in a task. Do not use this tool to handle subtle changes in an image.
- Video3DGeneration: Returns multiple chosen views of a 3D object from a single input image. The chosen views should be clearly stated in the Call_tool Input_text in the format [Angle1: "Degree-left/right", Angle2: ...]. Only use this tool when the user wants to retrieve multiple different views of a 3D object or a 3D scene from a single image at once. Cannot Coexist with other tool in one plan and can only be used once in a task.
- ImageMorph: Returns four images of the process of morphing from the first image to the second image. Only use this tool when the user wants to retrieve the morphing process between two images. Give a really simple caption like 'a photo of [cls]' in the instruction. Cannot Coexist with other tool in one plan and can only be used once in a task. You should provide two images in the input images.

Remember:
Different tools have different input restrictions and return different results. You are not doing the task yourself, think of the tool agent!
ImageGeneration: input text only; ImageEdit: input text and one image; VideoGeneration: input text and one image; Video3DGeneration: input one image; ImageMorph: input two images.

Warning:
- VideoGeneration, Video3DGeneration and ImageMorph cannot coexist with any other tool in one plan and can only be planned once for the whole task.
- Caption is always executed after all the images are generated, so plan any input image in the caption step if necessary.
- Video/3D generation is less controllable by text, so for text-controllable generation and editing use ImageGeneration or ImageEdit.

Considerations:
- Use explicit terms to avoid ambiguity (e.g., "Edit the image" for edits, "Generate an image" for new creations).
- Each Caption instruction should ask the tool agent to describe every aspect of the image you want to get, instead of generating the caption yourself.
- Each Call_tool instruction should be descriptive, focusing on the desired attributes, styles, and settings of the images.
- For sequential tasks, maintain consistency in characters, plot, and style across scenes by instruction.
- When comparing multiple images, ensure the original image is listed first.
- The output should be strictly in JSON format, else the extraction will fail.
- Output placeholders: For original input images, use #image{ID}#. For all images produced during the process, use <GEN_{ID}>. For each step's output, use <WAIT> as a placeholder.

Note:
If you want the tool agent to generate an image, your Input_text cannot use references like "previous outline" or "original image" to refer to any image. Provide a detailed description of the image you want instead.

Must: Your output JSON must be in strict format; any deviation will cause the failure of the evaluation.

Example Output:
Example1:
Input Task: Start with the whole image description. Then, for each object, display the object's image following its caption.
[{"ID": "0000", "Plan": [
  {"Step": 1, "Task": "Caption", "Input_text": "Briefly describe the input image.", "Input_images": ["#image1#"], "Output": "<WAIT>"},
  {"Step": 2, "Task": "Call_tool", "Input_text": "Generate an image of one of the key objects, focusing on its defining features.", "Input_images": [], "Output": "<WAIT>"},
  {"Step": 3, "Task": "AddImage", "Input_images": ["<GEN_0>"]},
  {"Step": 4, "Task": "Caption", "Input_text": "Describe the generated image, highlighting its key characteristics.", "Input_images": ["<GEN_0>"], "Output": "<WAIT>"}]}]

Example2:
Input Task: Generate an image for each step, and write a brief description after each image.
[{"ID": "0002", "Plan": [
  {"Step": 1, "Task": "Call_tool", "Input_text": "Generate an image of the first step ...", "Input_images": [], "Output": "<WAIT>"},
  {"Step": 2, "Task": "Call_tool", "Input_text": "Generate an image of the second step ...", "Input_images": [], "Output": "<WAIT>"},
  {"Step": 3, "Task": "AddImage", "Input_images": ["<GEN_0>"]},
  {"Step": 4, "Task": "Caption", "Input_text": "The image is the first step of the task. Describe the image.", "Input_images": ["<GEN_0>"], "Output": "<WAIT>"},
  {"Step": 5, "Task": "AddImage", "Input_images": ["<GEN_1>"]},
  {"Step": 6, "Task": "Caption", "Input_text": "The image shows what to do after the first step. Describe the image.", "Input_images": ["<GEN_1>"], "Output": "<WAIT>"}]}]
)P";
}

std::string agent_tool_selector() {
    return R"P(Task: You are a tool agent. Choose exactly one tool for the instruction below from the candidate list.
Output JSON only: {"Tool": "<one of the candidate names>", "Reason": "..."}
)P";
}

std::string agent_step_regeneration() {
    return R"P(Task: A step of a tool-usage plan failed. Rewrite only the step's "Input_text" with a more detailed and explicit instruction so that the tool agent can complete it. Keep the same intent, the same tool, and the same input images.
Output JSON only: {"Input_text": "..."}
)P";
}

std::string agent_caption() {
    return R"P(Task: You are a tool agent. Follow the instruction and write the requested text about the attached image(s). Output only the text itself, without any introduction.
)P";
}

std::string agent_smoothing() {
    return R"P(Task Instructions for Refining Text Segments in Multimodal Content

Sequence and Placeholder Preservation
- Maintain the exact sequence and number of text segments and image placeholders ('<boi><eoi>') as in the input. No new segments should be added between existing placeholders.

Text Flow Improvements
- Rephrase text segments for improved fluency and coherence. Remove redundancy and ensure smooth transitions between segments.

Image-Text Consistency
- Integrate references to the images naturally within the text without direct statements about the images. Describe or hint at image content.

Error Handling
- If any references to missing or problematic images occur, remove apologies or explanations to keep the narrative smooth.

Key Instructions:
Output must match input in sequence and number of placeholders. Ensure coherent and engaging text. Eliminate redundancy and fix fragmented sentences. Output the refined content only.

Fewshot Example:
Input:
<boi><eoi>
Image shows a seed in soil. The seed is planted.
<boi><eoi>
Image shows a sprout. A sprout grows out.
Output:
<boi><eoi>
A single seed rests in dark, moist soil, freshly planted.
<boi><eoi>
Days later, a tender green sprout pushes its way up toward the light.
)P";
}

}  // namespace isg::prompts
