// Optional at install time; typed loosely so builds succeed without it.
declare module "@xenova/transformers";
