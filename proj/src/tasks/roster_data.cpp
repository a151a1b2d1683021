#include "rsub/tasks/roster.hpp"

namespace rsub {

// Name rosters, 100 per race, in token order.
const std::array<std::array<const char*, 100>, 4>& builtin_roster_names() {
  static const std::array<std::array<const char*, 100>, 4> kNames = {{
      {{
          "Li Wei", "Wen Cheng", "Ming Hao", "Xiao Long", "Chao Feng", "Jie Ming", "Ping An",
          "Qiang Lei", "Jun Jie", "Zhi Hao", "Anh", "Duc", "Minh", "Tuan", "Huy", "Khanh", "Bao",
          "Long", "Quang", "Phuc", "Chen Wei", "Bo Tao", "Guang", "Hoang", "Jisung", "Hyun",
          "Minjun", "Jiho", "Kyung", "Dae", "Sangwoo", "Jinwoo", "Youngho", "Yong", "Ai Mei",
          "Xia Lin", "Haruto", "Ren", "Akira", "Kaito", "Yuto", "Riku", "Hiro", "Naoki", "Shota",
          "Sora", "Taeyang", "Donghyun", "Lan Anh", "Mei Ling", "Xiao Min", "Lian Jie", "Hong Yu",
          "Fang Zhi", "Ying Yue", "Wei Ning", "Lan Xi", "Hui Fang", "Ming Zhu", "Jisoo", "Minji",
          "Hana", "Yuna", "Eunji", "Seojin", "Hyejin", "Soojin", "Sunhee", "Miyoung", "Haeun",
          "Yeji", "Mio", "Chi", "Linh", "Ngoc", "Phuong", "Thao", "Thanh", "Hoa", "Huong", "Trang",
          "Diep", "Quoc", "Dat", "Li Na", "Joon", "Sakura", "Yui", "Aoi", "Eri", "Mei", "Kaori",
          "Rina", "Yuki", "Saki", "Reina", "Mai", "Thuy", "Minseo", "Yoshi"
      }},
      {{
          "Amari", "Aretha", "Ashanti", "Ayana", "Ayanna", "Chiquita", "Demetria", "Eboni",
          "Ebony", "Essence", "Iesha", "Imani", "Jalisa", "Khadijah", "Kierra", "Lakeisha",
          "Lakesha", "Lakeshia", "Lakisha", "Lashanda", "Lashonda", "Latanya", "Latasha",
          "Latonia", "Latonya", "Latoya", "Latrice", "Nakia", "Precious", "Queen", "Sade",
          "Shalonda", "Shameka", "Shamika", "Shaneka", "Shanice", "Shanika", "Shaniqua", "Shante",
          "Sharonda", "Shawanda", "Tameka", "Tamia", "Tamika", "Tanesha", "Tanika", "Tawanda",
          "Tierra", "Tyesha", "Valencia", "Akeem", "Alphonso", "Antwan", "Cedric", "Cedrick",
          "Cornell", "Cortez", "Darius", "Darrius", "Davon", "Deandre", "Deangelo", "Demarcus",
          "Demario", "Demetrice", "Demetrius", "Deonte", "Deshawn", "Devante", "Devonte", "Donte",
          "Frantz", "Jabari", "Jalen", "Jamaal", "Jamar", "Jamel", "Jaquan", "Jarvis", "Javon",
          "Jaylon", "Jermaine", "Kenyatta", "Keon", "Lamont", "Lashawn", "Malik", "Marquis",
          "Marquise", "Raheem", "Rashad", "Roosevelt", "Shaquille", "Stephon", "Sylvester",
          "Tevin", "Trevon", "Tyree", "Tyrell", "Tyrone"
      }},
      {{
          "Alba", "Alejandra", "Alondra", "Amparo", "Aura", "Beatriz", "Belkis", "Blanca",
          "Caridad", "Dayana", "Dulce", "Elba", "Esmeralda", "Flor", "Graciela", "Guadalupe",
          "Haydee", "Iliana", "Ivelisse", "Ivette", "Ivonne", "Juana", "Julissa", "Lissette",
          "Luz", "Magaly", "Maribel", "Maricela", "Mariela", "Marisol", "Maritza", "Mayra",
          "Migdalia", "Milagros", "Mireya", "Mirta", "Mirtha", "Nereida", "Nidia", "Noemi",
          "Odalys", "Paola", "Rocio", "Viviana", "Xiomara", "Yadira", "Yanet", "Yesenia", "Zoila",
          "Zoraida", "Agustin", "Alejandro", "Alvaro", "Andres", "Anibal", "Arnaldo", "Camilo",
          "Cesar", "Diego", "Edgardo", "Eduardo", "Efrain", "Esteban", "Francisco", "Gerardo",
          "German", "Gilberto", "Gonzalo", "Guillermo", "Gustavo", "Hector", "Heriberto", "Hernan",
          "Humberto", "Jairo", "Javier", "Jesus", "Jorge", "Jose", "Juan", "Julio", "Lazaro",
          "Leonel", "Luis", "Mauricio", "Miguel", "Moises", "Norberto", "Octavio", "Osvaldo",
          "Pablo", "Pedro", "Rafael", "Ramiro", "Raul", "Reinaldo", "Rigoberto", "Santiago",
          "Santos", "Wilfredo"
      }},
      {{
          "Abbey", "Abby", "Ansley", "Bailey", "Baylee", "Beth", "Caitlin", "Carley", "Carly",
          "Colleen", "Dixie", "Ginger", "Haley", "Hayley", "Heather", "Holli", "Holly", "Jane",
          "Jayne", "Jenna", "Jill", "Jodi", "Kaleigh", "Kaley", "Kari", "Katharine", "Kathleen",
          "Kathryn", "Kayleigh", "Lauri", "Laurie", "Leigh", "Lindsay", "Lori", "Luann", "Lynne",
          "Mandi", "Marybeth", "Mckenna", "Meghan", "Meredith", "Misti", "Molly", "Patti", "Sue",
          "Susan", "Susannah", "Susanne", "Suzanne", "Svetlana", "Bart", "Beau", "Braden",
          "Bradley", "Bret", "Brett", "Brody", "Buddy", "Cade", "Carson", "Cody", "Cole", "Colton",
          "Conner", "Connor", "Conor", "Cooper", "Dalton", "Dawson", "Doyle", "Dustin", "Dusty",
          "Gage", "Graham", "Grayson", "Gregg", "Griffin", "Hayden", "Heath", "Holden", "Hoyt",
          "Hunter", "Jack", "Jody", "Jon", "Lane", "Logan", "Parker", "Reed", "Reid", "Rhett",
          "Rocco", "Rusty", "Salvatore", "Scot", "Scott", "Stuart", "Tanner", "Tucker", "Wyatt"
      }},
  }};
  return kNames;
}

}  // namespace rsub
