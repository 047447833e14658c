"""First user messages for the bundled 200-seed corpus (2 domains x 10 topics x 10)."""

TASK = {
    "Answering questions based on passages": [
        "Who was the first man on the moon?",
        "Read this paragraph about the Roman aqueducts and tell me who paid for their construction.",
        "Based on the passage below, what year did the company go public?",
        "In the story I pasted, why does the narrator leave the village?",
        "According to the text, what are the three causes of soil erosion?",
        "Given this article excerpt, who is the main opponent of the new tax bill?",
        "From the passage, how many moons does Jupiter have?",
        "Answer using only the paragraph: what does the enzyme lactase break down?",
        "What is the main argument of the essay excerpt I shared?",
        "Using the passage about the French Revolution, when was the Bastille stormed?",
    ],
    "Discussing software errors and solutions": [
        "Describe and explain the benefits of OpenBSD",
        "My Python script throws KeyError: 'id' when parsing JSON, how do I fix it?",
        "Why does npm install fail with EACCES permission denied?",
        "I get a segmentation fault when I free a pointer twice in C. What is happening?",
        "Docker container exits immediately with code 137, what does that mean?",
        "How do I resolve a merge conflict in git without losing my changes?",
        "My React component re-renders infinitely after I added useEffect. Why?",
        "What causes java.lang.OutOfMemoryError: Java heap space?",
        "pip says 'externally-managed-environment' on Ubuntu, what should I do?",
        "Why is my SQL query returning duplicate rows after a join?",
    ],
    "Inquiries about specific plant growth conditions": [
        "how do I get rid of mosquitos?",
        "What soil pH do blueberries need to grow well?",
        "How much sunlight does a fiddle leaf fig need indoors?",
        "Can tomatoes grow in a shaded balcony?",
        "How often should I water succulents in winter?",
        "What temperature do orchids need to bloom?",
        "Why are the leaves on my basil plant turning yellow?",
        "Is it too late to plant garlic in November?",
        "What kind of fertilizer is best for roses?",
        "How do I keep my lavender alive in a humid climate?",
    ],
    "Requesting introductions for various chemical companies": [
        'Explain "reductive amination".',
        "Give me an introduction to BASF and its main business lines.",
        "Write a short company profile of Dow Chemical.",
        "Introduce Sinopec Shanghai Petrochemical Company.",
        "What does the chemical company Evonik produce?",
        "Provide an introduction of Shin-Etsu Chemical for an investor brief.",
        "Tell me about the history of DuPont.",
        "Write an introduction for LyondellBasell Industries.",
        "Describe the product portfolio of Solvay.",
        "Give an overview of Mitsubishi Chemical Group.",
    ],
    "Inquiries about AI tools, software design, and programming": [
        "write python function to reverse a sentence",
        "What is the difference between a transformer and an RNN?",
        "How should I structure a REST API for a to-do app?",
        "Write a SQL query that finds the second highest salary.",
        "Explain dependency injection with a small example.",
        "Which vector database should I use for semantic search?",
        "Write a bash script that renames all .txt files to .md.",
        "How do I fine-tune a small language model on my own data?",
        "What design pattern fits a plugin system?",
        "Implement binary search in JavaScript.",
    ],
    "Text processing (Merged)": [
        "sup peeps. Wanna help me with summarizing lyrics?",
        "Summarize this email in two sentences for my manager.",
        "Translate 'where is the train station' into German.",
        "Fix the grammar in this paragraph: me and him goes to the store yesterday.",
        "Extract all the dates from the following text.",
        "Rewrite this product description to sound more formal.",
        "Turn these meeting notes into a bullet list.",
        "Paraphrase the following sentence without changing its meaning.",
        "Classify the sentiment of this review: the food was cold and late.",
        "Give me five keywords that describe this abstract.",
    ],
    "Role-playing scenarios and character interactions (Merged)": [
        "Write me an extremely funny tale about pillow hoarding ducks at a luxurious hotel.",
        "Pretend you are a pirate captain and greet your new crew.",
        "Let's role-play: you are a detective interviewing me as a suspect.",
        "Act as a medieval innkeeper and describe today's specials.",
        "You are a spaceship AI, report the status of the engines.",
        "Play the role of my strict but fair chess coach.",
        "Be a wizard who just lost his spellbook. What do you say?",
        "Imagine you are a tour guide in ancient Rome. Start the tour.",
        "Pretend to be a cat explaining why it knocked the glass off the table.",
        "You are a barista at a busy cafe. Take my order.",
    ],
    "Geography, travel, and global cultural inquiries": [
        "explain why we have traffic lights?",
        "What is the best time of year to visit Kyoto?",
        "Why do people in Spain eat dinner so late?",
        "Which countries does the Danube river flow through?",
        "What should I know about tipping in the United States?",
        "How do I get from Lisbon airport to the city center?",
        "What are some traditional dishes from Peru?",
        "Why is Iceland so green while Greenland is icy?",
        "What languages are spoken in Switzerland?",
        "Plan a three day itinerary for Istanbul.",
    ],
    "Discussing and describing various characters": [
        "Tell me something about Stephen King's Dark Tower.",
        "Describe the personality of Sherlock Holmes.",
        "Who is Hermione Granger and why is she popular?",
        "What motivates Walter White in Breaking Bad?",
        "Describe the character arc of Zuko in Avatar.",
        "Is Gollum a villain or a victim?",
        "Tell me about the character Elizabeth Bennet.",
        "What makes the Joker such a compelling antagonist?",
        "Describe Captain Ahab's obsession in Moby Dick.",
        "Who is Geralt of Rivia?",
    ],
    "Creating and improving business strategies and products": [
        "how to make a game project success",
        "How can a small bakery compete with a supermarket chain?",
        "Suggest a pricing strategy for a new SaaS product.",
        "How do I validate a startup idea before building it?",
        "What metrics should a subscription business track?",
        "Give me ideas to improve customer retention for my gym.",
        "Write a go-to-market plan for a budgeting app.",
        "How should I prioritize features in my product roadmap?",
        "What are good ways to reduce churn in a mobile app?",
        "Help me write a value proposition for eco-friendly packaging.",
    ],
}

DAILY = {
    "Tourism": [
        "That is the most beautiful sunset !",
        "Excuse me , could you tell me how to get to the museum ?",
        "Is this the bus to the old town ?",
        "We'd like to book a tour of the castle for tomorrow .",
        "How long does it take to walk to the beach from here ?",
        "Can you recommend a good place to eat near the harbor ?",
        "I've lost my map . Where is the tourist information center ?",
        "What time does the cathedral close today ?",
        "Could you take a picture of us in front of the fountain ?",
        "Is it safe to swim in the lake ?",
    ],
    "Work": [
        "Hey , Zina . You're here early today .",
        "Did you finish the report for the meeting ?",
        "I think I'm going to ask for a raise .",
        "The printer is jammed again .",
        "Who is taking over the Johnson account ?",
        "Can you cover my shift on Friday ?",
        "I have a job interview tomorrow and I'm nervous .",
        "The new manager seems pretty strict .",
        "Are you coming to the training session this afternoon ?",
        "I've been working overtime all week .",
    ],
    "Politics": [
        "Every country should face the history .",
        "Did you vote in the election yesterday ?",
        "What do you think of the new mayor ?",
        "The government is raising taxes again .",
        "I watched the presidential debate last night .",
        "Do you think the new law will pass ?",
        "The protest downtown is getting bigger .",
        "Our senator is visiting the town next week .",
        "I don't trust any of the candidates .",
        "Have you read about the trade agreement ?",
    ],
    "Finance": [
        "It's all over . I'm bankrupt .",
        "I'd like to open a savings account .",
        "The stock market fell sharply today .",
        "How much is the interest rate on this loan ?",
        "I need to transfer some money to my sister .",
        "Should I invest in gold ?",
        "My credit card bill is huge this month .",
        "Can I exchange dollars for euros here ?",
        "I'm trying to save money for a new car .",
        "Our company's profits doubled this year .",
    ],
    "Health": [
        "Are you feeling better today , Bill ?",
        "I have a terrible headache .",
        "The doctor says I need to lose some weight .",
        "I've caught a cold again .",
        "How often do you go to the gym ?",
        "My back has been hurting for days .",
        "I can't sleep well at night .",
        "Do you think I should quit smoking ?",
        "I'm allergic to peanuts .",
        "I have an appointment with the dentist tomorrow .",
    ],
    "School Life": [
        "What can I help you with today ?",
        "Have you finished your homework ?",
        "I failed my math exam .",
        "Which classes are you taking this semester ?",
        "The library closes at nine tonight .",
        "Our professor gave us a huge assignment .",
        "Are you joining any clubs this year ?",
        "I need to find a roommate for next term .",
        "When is the deadline for the scholarship application ?",
        "I'm thinking of changing my major .",
    ],
    "Attitude & Emotion": [
        "Do you hear what happened to Sally ?",
        "I'm so happy today !",
        "Why are you so upset ?",
        "I can't believe he said that to me .",
        "I feel really lonely these days .",
        "You look worried . What's wrong ?",
        "I'm proud of you for finishing the race .",
        "I'm tired of everything .",
        "That movie made me cry .",
        "I'm so angry with my brother .",
    ],
    "Ordinary Life": [
        "Excuse me . Is this seat taken ?",
        "What would you like for dinner ?",
        "I need to buy some groceries .",
        "The washing machine is broken .",
        "Could you pass me the salt ?",
        "What time is it now ?",
        "Let's go for a walk in the park .",
        "I forgot my keys at home .",
        "It's raining again .",
        "Where did you buy that jacket ?",
    ],
    "Culture & Education": [
        "Harry , do you like the opera ?",
        "Have you been to the art exhibition downtown ?",
        "I'm learning to play the violin .",
        "What kind of books do you like to read ?",
        "Chinese calligraphy is very difficult .",
        "Did you watch the documentary about ancient Egypt ?",
        "I want to study abroad next year .",
        "Our city has a new science museum .",
        "Do you know much about Shakespeare ?",
        "I've started taking a French class .",
    ],
    "Relationship": [
        "I wonder how Sarah and Mat are .",
        "Will you marry me ?",
        "My girlfriend and I broke up last week .",
        "How did you meet your husband ?",
        "I think my roommate is avoiding me .",
        "We are celebrating our tenth anniversary .",
        "My parents don't like my boyfriend .",
        "Do you want to go out with me this weekend ?",
        "I haven't talked to my best friend in months .",
        "My sister is getting married next month .",
    ],
}
